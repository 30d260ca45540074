"""Bound-constrained augmented Lagrangian with a projected Newton inner solver."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.linalg as la
import scipy.sparse.linalg as spla

logger = logging.getLogger(__name__)


def project(z, lo, hi):
    return np.minimum(np.maximum(z, lo), hi)


def projected_gradient(z, g, lo, hi):
    """z - P(z - g); zero exactly at a first-order point of the box problem."""
    return z - project(z - g, lo, hi)


@dataclass
class InnerResult:
    z: np.ndarray
    value: float
    grad: np.ndarray
    pg_norm: float
    iterations: int
    start_value: float
    converged: bool


def sparse_solve(h, rhs, held, delta):
    """Solve the Newton system on the free variables with a general sparse LU."""
    free = np.flatnonzero(~held)
    h_ff = h[free][:, free].tocsc()
    if delta:
        h_ff = h_ff + sp.identity(free.size, format="csc") * delta
    d = np.zeros_like(rhs)
    d[free] = spla.splu(h_ff, permc_spec="COLAMD").solve(rhs[free])
    return d


class ArrowSolver:
    """Newton systems whose matrix is banded apart from a dense trailing border.

    The band block is factored with LAPACK banded LU and the border is
    eliminated through its Schur complement, so the cost is linear in the
    band size. Held variables get an identity row and column.
    """

    def __init__(self, n_band: int, bandwidth: int):
        self.n_band = int(n_band)
        self.bw = int(bandwidth)

    def __call__(self, h, rhs, held, delta):
        nb, bw = self.n_band, self.bw
        n = rhs.size
        coo = h.tocoo()
        r, c, v = coo.row, coo.col, coo.data
        keep = ~(held[r] | held[c])
        r, c, v = r[keep], c[keep], v[keep]
        diag = np.where(held, 1.0, delta)

        in_band = (r < nb) & (c < nb)
        rb, cb = r[in_band], c[in_band]
        if np.any(np.abs(rb - cb) > bw):
            raise ValueError("matrix exceeds the declared bandwidth")
        ab = np.zeros((2 * bw + 1, nb))
        np.add.at(ab, (bw + rb - cb, cb), v[in_band])
        ab[bw] += diag[:nb]

        m = n - nb
        border = np.zeros((nb, m))
        sel = (r < nb) & (c >= nb)
        np.add.at(border, (r[sel], c[sel] - nb), v[sel])
        dense = np.zeros((m, m))
        sel = (r >= nb) & (c >= nb)
        np.add.at(dense, (r[sel] - nb, c[sel] - nb), v[sel])
        dense[np.diag_indices(m)] += diag[nb:]

        rhs = np.where(held, 0.0, rhs)
        y = la.solve_banded((bw, bw), ab, np.column_stack([border, rhs[:nb]]), check_finite=False)
        schur = dense - border.T @ y[:, :m]
        d_tail = la.solve(schur, rhs[nb:] - border.T @ y[:, m], check_finite=False)
        return np.concatenate([y[:, m] - y[:, :m] @ d_tail, d_tail])


def cancel_split_pairs(z, pairs):
    """Replace each (p, m) >= 0 pair by (max(p - m, 0), max(m - p, 0))."""
    if pairs is None:
        return z
    ip, im = pairs
    net = z[ip] - z[im]
    z = z.copy()
    z[ip] = np.maximum(net, 0.0)
    z[im] = np.maximum(-net, 0.0)
    return z


def projected_newton(
    fun, hess, z0, lo, hi, gtol=1e-6, max_iter=500, c1=1e-4, max_backtrack=40, pairs=None, linsolve=sparse_solve
):
    """Projected Newton method for a box-constrained smooth problem.

    ``hess(z)`` returns a sparse symmetric Hessian. Variables held at a bound
    by the gradient are fixed for the step; the Newton system on the rest is
    regularised until it yields a descent direction.

    ``pairs = (ip, im)`` marks split variables whose difference is all that
    the constraints see and whose sum is penalised linearly. Each pair is
    cancelled before a step and only one member may move, which removes the
    zero-curvature direction along ``e_p + e_m``.

    ``linsolve(h, rhs, held, delta)`` solves ``(h + delta I) d = rhs`` on the
    free variables and returns zeros on the held ones.
    """
    z = cancel_split_pairs(project(np.asarray(z0, dtype=float), lo, hi), pairs)
    f, g = fun(z)
    f0 = f
    pg_norm = float(np.max(np.abs(projected_gradient(z, g, lo, hi))))
    it = 0
    delta = 0.0
    while pg_norm > gtol and it < max_iter:
        it += 1
        eps = min(1e-6, pg_norm)
        held = ((z <= lo + eps) & (g > 0)) | ((z >= hi - eps) & (g < 0))
        if pairs is not None:
            ip, im = pairs
            # a partner within eps of its bound counts as zero, else both can lock
            live_p = (z[ip] > 0) & ~held[ip]
            live_m = (z[im] > 0) & ~held[im]
            held[im] |= live_p
            held[ip] |= live_m
        h = hess(z)
        g_f = np.where(held, 0.0, g)
        scale = max(float(np.max(np.abs(h.diagonal()[~held]), initial=0.0)), 1.0)
        d = None
        delta = delta * 0.1
        for _ in range(12):
            try:
                d_try = linsolve(h, -g_f, held, delta * scale)
            except (RuntimeError, np.linalg.LinAlgError):
                d_try = None
            if d_try is not None and np.all(np.isfinite(d_try)):
                gd = float(g_f @ d_try)
                if gd < -1e-12 * np.linalg.norm(g_f) * np.linalg.norm(d_try):
                    d = d_try
                    break
            delta = 1e-10 if delta < 1e-10 else delta * 100.0
        if d is None:
            d = -g_f / scale
        step = 1.0
        accepted = False
        for _ in range(max_backtrack):
            z_new = project(z + step * d, lo, hi)
            f_new, g_new = fun(z_new)
            if np.isfinite(f_new) and f_new <= f + c1 * float(g @ (z_new - z)):
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break
        if pairs is not None:
            z_new = cancel_split_pairs(z_new, pairs)
            f_new, g_new = fun(z_new)
        z, f, g = z_new, f_new, g_new
        pg_norm = float(np.max(np.abs(projected_gradient(z, g, lo, hi))))
    return InnerResult(z, f, g, pg_norm, it, f0, pg_norm <= gtol)


@dataclass
class ALOptions:
    kkt_tol: float = 1e-6
    constraint_tol: float = 1e-8
    max_outer: int = 50
    max_inner: int = 500
    mu0: float = 1e3
    mu_growth: float = 10.0
    mu_max: float = 1e12


@dataclass
class ALResult:
    z: np.ndarray
    multipliers: np.ndarray
    objective: float
    constraint_norm: float
    kkt_residual: float
    outer_iterations: int
    inner_iterations: int
    converged: bool
    history: list = field(default_factory=list)


def augmented_lagrangian(
    problem, z0, lo, hi, options: ALOptions | None = None, pairs=None, linsolve=sparse_solve
) -> ALResult:
    """Solve min f(z) s.t. c(z) = 0, lo <= z <= hi.

    ``problem`` provides ``objective``, ``objective_grad``, ``constraints``
    ``jac_t_vec``, ``objective_hess`` and ``lagrangian_hess``. ``pairs`` and
    ``linsolve`` are passed on to :func:`projected_newton`.

    Each entry of ``history`` records the augmented-Lagrangian value at the
    start and end of an outer iteration under that iteration's multipliers
    and penalty.
    """
    opt = options or ALOptions()
    h_obj = problem.objective_hess()

    z = project(np.asarray(z0, dtype=float), lo, hi)
    y = np.zeros(problem.n_con)
    mu = opt.mu0
    omega = 1.0 / mu
    eta = 1.0 / mu**0.1
    history = []
    total_inner = 0
    converged = False
    c = problem.constraints(z)
    kkt = np.inf
    outer = 0

    for outer in range(1, opt.max_outer + 1):

        def fun(zz, y=y, mu=mu):
            cc = problem.constraints(zz)
            val = problem.objective(zz) + float(y @ cc) + 0.5 * mu * float(cc @ cc)
            grad = problem.objective_grad(zz) + problem.jac_t_vec(zz, y + mu * cc)
            return val, grad

        gtol = max(omega, 0.1 * opt.kkt_tol)

        def hess(zz, y=y, mu=mu):
            return problem.lagrangian_hess(zz, y + mu * problem.constraints(zz), mu, h_obj)

        res = projected_newton(
            fun, hess, z, lo, hi, gtol=gtol, max_iter=opt.max_inner, pairs=pairs, linsolve=linsolve
        )
        total_inner += res.iterations
        z = res.z
        c = problem.constraints(z)
        c_norm = float(np.max(np.abs(c))) if c.size else 0.0
        y_trial = y + mu * c
        g_lag = problem.objective_grad(z) + problem.jac_t_vec(z, y_trial)
        kkt = float(np.max(np.abs(projected_gradient(z, g_lag, lo, hi))))
        history.append(
            dict(
                outer=outer,
                mu=mu,
                merit_start=res.start_value,
                merit_end=res.value,
                constraint_norm=c_norm,
                kkt=kkt,
                inner_iterations=res.iterations,
            )
        )
        logger.debug("AL outer %d mu=%.1e |c|=%.2e kkt=%.2e inner=%d", outer, mu, c_norm, kkt, res.iterations)
        if c_norm <= opt.constraint_tol and kkt <= opt.kkt_tol:
            y = y_trial
            converged = True
            break
        if c_norm <= eta:
            y = y_trial
            omega = max(omega / mu, 0.1 * opt.kkt_tol)
            eta = max(eta / mu**0.9, 0.1 * opt.constraint_tol)
        else:
            mu = min(mu * opt.mu_growth, opt.mu_max)
            omega = max(1.0 / mu, 0.1 * opt.kkt_tol)
            eta = max(1.0 / mu**0.1, 0.1 * opt.constraint_tol)

    return ALResult(
        z=z,
        multipliers=y,
        objective=problem.objective(z),
        constraint_norm=float(np.max(np.abs(c))) if c.size else 0.0,
        kkt_residual=kkt,
        outer_iterations=outer,
        inner_iterations=total_inner,
        converged=converged,
        history=history,
    )
