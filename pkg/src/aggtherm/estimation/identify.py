"""Joint identification of aggregate parameters and the aggregate heat load."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, fields

import numpy as np

from ..aggregation import AggregateData, AggregateParams
from ..thermal import DEFAULT_TS
from .model import N_STATES, N_THETA, build_augmented_model, discretize
from .problem import BANDWIDTH, BatchProblem, Weights
from .solver import ALOptions, ArrowSolver, augmented_lagrangian

logger = logging.getLogger(__name__)

# Generic initial guess of building-scale magnitudes (h, kWh/degC, degC m2/kWh).
DEFAULT_THETA_PRIOR = (1.0, 1.0, 20.0, 3.0, 1.0, 0.5, 5.0)

INIT_MODES = ("consistent", "rollout")


@dataclass(frozen=True, eq=False)
class IdentConfig:
    """Weights, boxes and solver settings for :func:`solve_batch`.

    ``x0_prior`` left as None means (first T_z sample, first T_z sample, 0).
    ``r`` is the measurement-noise variance, so the residual weight is 1/r.

    ``init`` picks the starting trajectory. "consistent" integrates the wall
    equation along the measured zone temperature and inverts the zone
    equation for the load; "rollout" simulates the prior model from x0 with
    zero process noise.
    """

    theta_prior: tuple = DEFAULT_THETA_PRIOR
    p_theta_inv: np.ndarray = field(default_factory=lambda: 0.1 * np.eye(N_THETA))
    x0_prior: tuple | None = None
    p_x0_inv: np.ndarray = field(default_factory=lambda: np.diag([1.0, 0.01, 0.01]))
    lam: float = 10.0
    r: float = 0.01
    alpha: float = 1e-3
    theta_lower: float = 1e-3
    theta_upper: float = 1e3
    q_lower: float = 0.0
    q_upper: float = np.inf
    q_scale: float = 1.0
    kkt_tol: float = 1e-6
    constraint_tol: float = 1e-8
    max_outer: int = 50
    max_inner: int = 500
    mu0: float = 1e3
    init: str = "consistent"
    multistart: int = 0
    seed: int = 0

    def __post_init__(self):
        th = np.asarray(self.theta_prior, dtype=float)
        if isinstance(self.theta_prior, AggregateParams):
            th = self.theta_prior.to_array()
        if th.shape != (N_THETA,) or not np.all(np.isfinite(th)):
            raise ValueError("theta_prior needs 7 finite values")
        object.__setattr__(self, "theta_prior", tuple(float(v) for v in th))
        if self.x0_prior is not None:
            x0 = np.asarray(self.x0_prior, dtype=float)
            if x0.shape != (N_STATES,):
                raise ValueError("x0_prior needs 3 values")
            object.__setattr__(self, "x0_prior", tuple(float(v) for v in x0))
        for name, n in (("p_theta_inv", N_THETA), ("p_x0_inv", N_STATES)):
            m = np.array(getattr(self, name), dtype=float)
            if m.shape != (n, n) or not np.allclose(m, m.T):
                raise ValueError(f"{name} must be a symmetric {n}x{n} matrix")
            if np.any(np.linalg.eigvalsh(m) <= 0):
                raise ValueError(f"{name} must be positive definite")
            m.setflags(write=False)
            object.__setattr__(self, name, m)
        for name in ("lam", "r", "alpha", "q_scale", "kkt_tol", "constraint_tol", "mu0"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not (0 < self.theta_lower < self.theta_upper):
            raise ValueError("theta box must satisfy 0 < lower < upper")
        if not self.q_lower < self.q_upper:
            raise ValueError("load box is empty")
        if self.max_outer < 1 or self.max_inner < 1:
            raise ValueError("iteration caps must be at least 1")
        if self.init not in INIT_MODES:
            raise ValueError(f"init must be one of {INIT_MODES}")
        if self.multistart < 0:
            raise ValueError("multistart must be non-negative")

    def replace(self, **changes) -> "IdentConfig":
        vals = {f.name: getattr(self, f.name) for f in fields(self)}
        vals.update(changes)
        return IdentConfig(**vals)


@dataclass(frozen=True, eq=False)
class EstimationResult:
    theta_hat: AggregateParams
    x_hat: np.ndarray
    xi_hat: np.ndarray
    nu_hat: np.ndarray
    objective_value: float
    kkt_residual: float
    constraint_residual: float
    iterations: int
    inner_iterations: int
    converged: bool
    history: tuple = ()

    @property
    def q_agg_hat(self) -> np.ndarray:
        return self.x_hat[:, 2]

    @property
    def t_bar_w_hat(self) -> np.ndarray:
        return self.x_hat[:, 1]


def _check_data(data: AggregateData):
    if data.n_t < 3:
        raise ValueError("identification needs at least 3 samples")
    for name in ("t_bar_z", "t_bar_a", "eta_bar_solar", "q_bar_ac"):
        if not np.all(np.isfinite(getattr(data, name))):
            raise ValueError(f"{name} contains non-finite values")


def build_problem(data: AggregateData, config: IdentConfig) -> BatchProblem:
    _check_data(data)
    x0 = config.x0_prior
    if x0 is None:
        x0 = (data.t_bar_z[0], data.t_bar_z[0], 0.0)
    w = Weights(
        x0_ref=np.asarray(x0, dtype=float),
        p_x0_inv=np.asarray(config.p_x0_inv),
        theta_ref=np.asarray(config.theta_prior),
        p_theta_inv=np.asarray(config.p_theta_inv),
        lam=config.lam,
        inv_r=1.0 / config.r,
        alpha=config.alpha,
    )
    return BatchProblem(data.t_s, data.t_bar_z, data.inputs, w, q_scale=config.q_scale)


def bounds(problem: BatchProblem, config: IdentConfig):
    lo = np.full(problem.size, -np.inf)
    hi = np.full(problem.size, np.inf)
    lo[problem.i_theta] = config.theta_lower
    hi[problem.i_theta] = config.theta_upper
    lo[problem.idx_x[:, 2]] = config.q_lower / config.q_scale
    hi[problem.idx_x[:, 2]] = config.q_upper / config.q_scale
    lo[problem.idx_xp] = 0.0
    lo[problem.idx_xm] = 0.0
    return lo, hi


def initial_point(problem: BatchProblem, data: AggregateData, config: IdentConfig, theta=None) -> np.ndarray:
    theta = np.asarray(config.theta_prior if theta is None else theta, dtype=float)
    theta = np.clip(theta, config.theta_lower, config.theta_upper)
    model = build_augmented_model(theta)
    a, b = model.a, model.b
    u = data.inputs
    n, t_s = data.n_t, data.t_s
    x0 = problem.w.x0_ref
    x = np.empty((n, N_STATES))
    if config.init == "rollout":
        x[0] = x0
        for k in range(n - 1):
            x[k + 1] = x[k] + t_s * (a @ x[k] + b @ u[k])
    else:
        t_z = data.t_bar_z
        x[:, 0] = t_z
        x[0, 1] = x0[1]
        for k in range(n - 1):
            x[k + 1, 1] = x[k, 1] + t_s * (a[1, 0] * t_z[k] + a[1, 1] * x[k, 1] + b[1] @ u[k])
        rate = np.diff(t_z) / t_s - (a[0, 0] * t_z[:-1] + a[0, 1] * x[:-1, 1] + u[:-1] @ b[0])
        q = np.append(rate / a[0, 2], rate[-1] / a[0, 2])
        x[:, 2] = np.clip(q, config.q_lower, config.q_upper)
    x[:, 2] /= config.q_scale
    xi = np.diff(x[:, 2])
    return problem.pack(theta, x, np.maximum(xi, 0.0), np.maximum(-xi, 0.0))


def _solve_from(problem, z0, lo, hi, options):
    return augmented_lagrangian(
        problem, z0, lo, hi, options, pairs=problem.split_pairs(), linsolve=ArrowSolver(problem.n_band, BANDWIDTH)
    )


def solve_batch(data: AggregateData, config: IdentConfig | None = None) -> EstimationResult:
    """Estimate theta, the state trajectory and the aggregate load in one solve.

    With ``config.multistart > 0`` extra starts are drawn by scaling the
    prior by log-uniform factors in [1/2, 2] from ``config.seed``; the best
    converged solution is kept (the best overall if none converged).
    """
    config = config or IdentConfig()
    problem = build_problem(data, config)
    lo, hi = bounds(problem, config)
    options = ALOptions(
        kkt_tol=config.kkt_tol,
        constraint_tol=config.constraint_tol,
        max_outer=config.max_outer,
        max_inner=config.max_inner,
        mu0=config.mu0,
    )
    starts = [np.asarray(config.theta_prior)]
    rng = np.random.default_rng(config.seed)
    for _ in range(config.multistart):
        starts.append(starts[0] * np.exp(rng.uniform(-np.log(2.0), np.log(2.0), N_THETA)))

    best = None
    for i, theta0 in enumerate(starts):
        res = _solve_from(problem, initial_point(problem, data, config, theta0), lo, hi, options)
        logger.info("start %d: f=%.6g converged=%s", i, res.objective, res.converged)
        key = (not res.converged, res.objective)
        if best is None or key < best[0]:
            best = (key, res)
    res = best[1]
    if not res.converged:
        logger.warning("identification stopped at the iteration cap (kkt=%.2e)", res.kkt_residual)

    theta, xs, xp, xm = problem.unpack(res.z)
    x_hat = xs * problem.state_scale
    x_hat.setflags(write=False)
    xi = (xp - xm) * config.q_scale
    nu = data.t_bar_z - x_hat[:, 0]
    for a in (xi, nu):
        a.setflags(write=False)
    return EstimationResult(
        theta_hat=AggregateParams.from_array(theta),
        x_hat=x_hat,
        xi_hat=xi,
        nu_hat=nu,
        objective_value=res.objective,
        kkt_residual=res.kkt_residual,
        constraint_residual=res.constraint_norm,
        iterations=res.outer_iterations,
        inner_iterations=res.inner_iterations,
        converged=res.converged,
        history=tuple(res.history),
    )


def objective(z, data: AggregateData, config: IdentConfig) -> float:
    """Batch objective at a packed decision vector (see :class:`BatchProblem`)."""
    return build_problem(data, config).objective(z)


def gradient(z, data: AggregateData, config: IdentConfig) -> np.ndarray:
    return build_problem(data, config).objective_grad(z)


@dataclass(frozen=True, eq=False)
class Prediction:
    t_z: np.ndarray
    t_w: np.ndarray
    rmse: float
    rmse_defined: bool


def predict_out_of_sample(theta, u, d, x0, measured=None, t_s: float = DEFAULT_TS) -> Prediction:
    """Simulate the aggregate model with the load channel driven by ``d``.

    Parameters
    ----------
    theta : AggregateParams or array_like
    u : array_like, shape (N, 3)
        Inputs (T_a, eta_solar, q_ac).
    d : array_like, shape (N,)
        Disturbance used in place of the load state, e.g. q_bar_int.
    x0 : array_like
        Initial (T_z, T_w).
    measured : array_like, optional
        Measured average zone temperature for the RMSE.
    t_s : float
        Sampling time in hours.

    Returns
    -------
    Prediction
        ``rmse_defined`` is False for an empty horizon or without a measurement.
    """
    u = np.asarray(u, dtype=float).reshape(-1, 3)
    d = np.asarray(d, dtype=float).reshape(-1)
    n = u.shape[0]
    if d.size != n or (measured is not None and np.size(measured) != n):
        raise ValueError("inputs, disturbance and measurement lengths differ")
    x = np.empty((n, N_STATES))
    if n > 0:
        step = discretize(build_augmented_model(theta), t_s)
        x[0, :2] = x0
        x[:, 2] = d
        for k in range(n - 1):
            x[k + 1, :2] = step.step(x[k], u[k])[:2]
    t_z, t_w = x[:, 0].copy(), x[:, 1].copy()
    if n == 0 or measured is None:
        return Prediction(t_z, t_w, float("nan"), False)
    err = t_z - np.asarray(measured, dtype=float).reshape(-1)
    return Prediction(t_z, t_w, float(np.sqrt(np.mean(err * err))), True)
