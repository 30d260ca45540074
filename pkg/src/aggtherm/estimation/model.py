"""Augmented aggregate state-space model.

State order is (average zone temperature, average wall temperature,
aggregate internal load); inputs are (ambient temperature, solar
irradiance, cooling rate).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..aggregation import AggregateParams

N_STATES = 3
N_INPUTS = 3
N_THETA = 7

OUTPUT_SELECTOR = np.array([1.0, 0.0, 0.0])
NOISE_INPUT = np.array([0.0, 0.0, 1.0])


@dataclass(frozen=True, eq=False)
class AugmentedModel:
    theta: AggregateParams
    a: np.ndarray
    b: np.ndarray
    f: np.ndarray = OUTPUT_SELECTOR
    g: np.ndarray = NOISE_INPUT

    def rhs(self, x, u):
        """Continuous-time derivative for states ``x`` (..., 3) and inputs ``u`` (..., 3)."""
        return np.asarray(x) @ self.a.T + np.asarray(u) @ self.b.T


def build_augmented_model(theta) -> AugmentedModel:
    """Assemble A(theta) and B(theta).

    The load state enters the zone equation as ``q_agg / C_z`` and cooling as
    ``-q_ac / C_z``, so that ``A x + B u`` is the aggregate zone model with the
    load held constant between samples.
    """
    if not isinstance(theta, AggregateParams):
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (N_THETA,) or not np.all(np.isfinite(theta)) or np.any(theta <= 0):
            raise ValueError("theta must be 7 finite positive numbers")
        theta = AggregateParams.from_array(theta)
    t = theta
    a = np.array(
        [
            [-1.0 / t.tau_za - 1.0 / t.tau_zw, 1.0 / t.tau_zw, 1.0 / t.c_z],
            [1.0 / t.tau_wz, -1.0 / t.tau_wa - 1.0 / t.tau_wz, 0.0],
            [0.0, 0.0, 0.0],
        ]
    )
    b = np.array(
        [
            [1.0 / t.tau_za, t.a_z, -1.0 / t.c_z],
            [1.0 / t.tau_wa, t.a_w, 0.0],
            [0.0, 0.0, 0.0],
        ]
    )
    a.setflags(write=False)
    b.setflags(write=False)
    return AugmentedModel(theta=t, a=a, b=b)


@dataclass(frozen=True, eq=False)
class DiscreteModel:
    """Forward-Euler map x[k+1] = x[k] + t_s (A x[k] + B u[k]) + G xi[k]."""

    model: AugmentedModel
    t_s: float

    def step(self, x, u, xi=0.0):
        x = np.asarray(x, dtype=float)
        return x + self.t_s * self.model.rhs(x, u) + self.model.g * xi

    def rollout(self, x0, u, xi=None) -> np.ndarray:
        """States for every row of ``u``; ``xi`` has one entry per transition."""
        u = np.asarray(u, dtype=float)
        n = u.shape[0]
        xi = np.zeros(max(n - 1, 0)) if xi is None else np.asarray(xi, dtype=float)
        x = np.empty((n, N_STATES))
        if n == 0:
            return x
        x[0] = x0
        for k in range(n - 1):
            x[k + 1] = self.step(x[k], u[k], xi[k])
        return x


def discretize(model: AugmentedModel, t_s: float) -> DiscreteModel:
    if not t_s > 0:
        raise ValueError("t_s must be positive")
    return DiscreteModel(model, float(t_s))
