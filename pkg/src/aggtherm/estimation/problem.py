"""Full-transcription batch estimation problem.

The decision vector is laid out time step by time step with the parameters
last, which keeps every Hessian a band plus a dense border::

    [Tz0 Tw0 q0 xi+0 xi-0 | Tz1 Tw1 q1 xi+1 xi-1 | ... | TzN-1 TwN-1 qN-1 | theta (7)]

The load state is stored divided by ``q_scale``; process noise acts on the
scaled load and carries the same scaling.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .model import N_STATES, N_THETA

BLOCK = N_STATES + 2
BANDWIDTH = BLOCK + N_STATES - 1


@dataclass(frozen=True, eq=False)
class Weights:
    x0_ref: np.ndarray
    p_x0_inv: np.ndarray
    theta_ref: np.ndarray
    p_theta_inv: np.ndarray
    lam: float
    inv_r: float
    alpha: float


class BatchProblem:
    """Objective, dynamics constraints and their derivatives for one dataset.

    ``z_meas`` is the measured average zone temperature and ``u`` the input
    matrix (T_a, eta_solar, q_ac) with one row per sample.
    """

    def __init__(self, t_s: float, z_meas, u, weights: Weights, q_scale: float = 1.0):
        self.t_s = float(t_s)
        self.z_meas = np.asarray(z_meas, dtype=float)
        self.u = np.asarray(u, dtype=float)
        self.n = self.z_meas.size
        if self.n < 3:
            raise ValueError("need at least 3 samples")
        if self.u.shape != (self.n, 3):
            raise ValueError("inputs must have shape (N_t, 3)")
        self.w = weights
        self.q_scale = float(q_scale)
        m = self.n - 1
        self.n_band = BLOCK * m + N_STATES
        self.size = self.n_band + N_THETA
        self.n_con = N_STATES * m
        self.state_scale = np.array([1.0, 1.0, self.q_scale])

        k = np.arange(self.n)
        self.idx_x = BLOCK * k[:, None] + np.arange(N_STATES)[None, :]
        self.idx_xp = BLOCK * k[:-1] + N_STATES
        self.idx_xm = BLOCK * k[:-1] + N_STATES + 1
        self.idx_theta = self.n_band + np.arange(N_THETA)
        self.i_theta = slice(self.n_band, self.size)

    # -- packing -----------------------------------------------------------

    def unpack(self, z):
        z = np.asarray(z)
        return z[self.i_theta], z[self.idx_x], z[self.idx_xp], z[self.idx_xm]

    def pack(self, theta, x, xi_plus=None, xi_minus=None):
        z = np.zeros(self.size)
        z[self.i_theta] = theta
        z[self.idx_x] = np.asarray(x, dtype=float).reshape(self.n, N_STATES)
        if xi_plus is not None:
            z[self.idx_xp] = xi_plus
        if xi_minus is not None:
            z[self.idx_xm] = xi_minus
        return z

    def physical_states(self, z):
        return self.unpack(z)[1] * self.state_scale

    def split_pairs(self):
        return self.idx_xp, self.idx_xm

    # -- objective ---------------------------------------------------------

    def objective_terms(self, z) -> dict[str, float]:
        theta, x, xp, xm = self.unpack(z)
        w = self.w
        dx0 = x[0] * self.state_scale - w.x0_ref
        dth = theta - w.theta_ref
        nu = self.z_meas - x[:, 0]
        q = x[:-1, 2] * self.q_scale
        return {
            "x0_prior": float(dx0 @ w.p_x0_inv @ dx0),
            "theta_prior": float(dth @ w.p_theta_inv @ dth),
            "process_noise": float(w.lam * self.q_scale * (np.sum(xp) + np.sum(xm))),
            "measurement": float(w.inv_r * np.sum(nu * nu)),
            "load": float(w.alpha * np.sum(q * q)),
        }

    def objective(self, z) -> float:
        return float(sum(self.objective_terms(z).values()))

    def objective_grad(self, z) -> np.ndarray:
        theta, x, _, _ = self.unpack(z)
        w = self.w
        g = np.zeros(self.size)
        gx = np.zeros((self.n, N_STATES))
        dx0 = x[0] * self.state_scale - w.x0_ref
        gx[0] += 2.0 * (w.p_x0_inv @ dx0) * self.state_scale
        gx[:, 0] += -2.0 * w.inv_r * (self.z_meas - x[:, 0])
        gx[:-1, 2] += 2.0 * w.alpha * self.q_scale**2 * x[:-1, 2]
        g[self.idx_x] = gx
        g[self.idx_xp] = w.lam * self.q_scale
        g[self.idx_xm] = w.lam * self.q_scale
        g[self.i_theta] = 2.0 * w.p_theta_inv @ (theta - w.theta_ref)
        return g

    def objective_hess(self) -> sp.csr_matrix:
        """Constant Hessian of the objective (the L1 part is linear)."""
        w = self.w
        rows, cols, vals = [], [], []
        for i in range(N_THETA):
            for j in range(N_THETA):
                if w.p_theta_inv[i, j] != 0.0:
                    rows.append(self.idx_theta[i])
                    cols.append(self.idx_theta[j])
                    vals.append(2.0 * w.p_theta_inv[i, j])
        for i in range(N_STATES):
            for j in range(N_STATES):
                v = 2.0 * w.p_x0_inv[i, j] * self.state_scale[i] * self.state_scale[j]
                if v != 0.0:
                    rows.append(self.idx_x[0, i])
                    cols.append(self.idx_x[0, j])
                    vals.append(v)
        rows.extend(self.idx_x[:, 0])
        cols.extend(self.idx_x[:, 0])
        vals.extend(np.full(self.n, 2.0 * w.inv_r))
        rows.extend(self.idx_x[:-1, 2])
        cols.extend(self.idx_x[:-1, 2])
        vals.extend(np.full(self.n - 1, 2.0 * w.alpha * self.q_scale**2))
        return sp.csr_matrix((vals, (rows, cols)), shape=(self.size, self.size))

    # -- dynamics ----------------------------------------------------------

    @staticmethod
    def _rates(theta):
        tau_za, tau_zw, tau_wa, tau_wz, c_z, a_z, a_w = theta
        return 1.0 / tau_za, 1.0 / tau_zw, 1.0 / tau_wa, 1.0 / tau_wz, 1.0 / c_z, a_z, a_w

    def constraints(self, z) -> np.ndarray:
        """Dynamics residuals for every transition, flattened from shape (N-1, 3)."""
        theta, x, xp, xm = self.unpack(z)
        k1, k2, k3, k4, b, a_z, a_w = self._rates(theta)
        ts, s = self.t_s, self.q_scale
        tz, tw, qs = x[:-1, 0], x[:-1, 1], x[:-1, 2]
        ta, eta, qac = self.u[:-1, 0], self.u[:-1, 1], self.u[:-1, 2]
        c = np.empty((self.n - 1, N_STATES))
        c[:, 0] = x[1:, 0] - tz - ts * (k1 * (ta - tz) + k2 * (tw - tz) + a_z * eta + b * (s * qs - qac))
        c[:, 1] = x[1:, 1] - tw - ts * (k3 * (ta - tw) + k4 * (tz - tw) + a_w * eta)
        c[:, 2] = x[1:, 2] - qs - (xp - xm)
        return c.reshape(-1)

    def _theta_columns(self, theta, x):
        """d c / d theta per transition, shape (N-1, 3, 7)."""
        k1, k2, k3, k4, b, _, _ = self._rates(theta)
        ts, s = self.t_s, self.q_scale
        tz, tw, qs = x[:-1, 0], x[:-1, 1], x[:-1, 2]
        ta, eta, qac = self.u[:-1, 0], self.u[:-1, 1], self.u[:-1, 2]
        d = np.zeros((self.n - 1, N_STATES, N_THETA))
        d[:, 0, 0] = ts * k1 * k1 * (ta - tz)
        d[:, 0, 1] = ts * k2 * k2 * (tw - tz)
        d[:, 1, 2] = ts * k3 * k3 * (ta - tw)
        d[:, 1, 3] = ts * k4 * k4 * (tz - tw)
        d[:, 0, 4] = ts * b * b * (s * qs - qac)
        d[:, 0, 5] = -ts * eta
        d[:, 1, 6] = -ts * eta
        return d

    def jac_t_vec(self, z, v) -> np.ndarray:
        """J(z)^T v for a constraint-space vector ``v``."""
        theta, x, _, _ = self.unpack(z)
        k1, k2, k3, k4, b, _, _ = self._rates(theta)
        ts, s = self.t_s, self.q_scale
        v = np.asarray(v).reshape(self.n - 1, N_STATES)
        v0, v1, v2 = v[:, 0], v[:, 1], v[:, 2]
        out = np.zeros(self.size)
        gx = np.zeros((self.n, N_STATES))
        gx[1:] += v
        gx[:-1, 0] += (-1.0 + ts * (k1 + k2)) * v0 - ts * k4 * v1
        gx[:-1, 1] += -ts * k2 * v0 + (-1.0 + ts * (k3 + k4)) * v1
        gx[:-1, 2] += -ts * b * s * v0 - v2
        out[self.idx_x] = gx
        out[self.idx_xp] = -v2
        out[self.idx_xm] = v2
        out[self.i_theta] = np.einsum("kcp,kc->p", self._theta_columns(theta, x), v)
        return out

    def jacobian(self, z) -> sp.csr_matrix:
        """Sparse constraint Jacobian, shape (3(N-1), size)."""
        theta, x, _, _ = self.unpack(z)
        k1, k2, k3, k4, b, _, _ = self._rates(theta)
        ts, s = self.t_s, self.q_scale
        m = self.n - 1
        k = np.arange(m)
        r0, r1, r2 = 3 * k, 3 * k + 1, 3 * k + 2
        ix = self.idx_x
        ones = np.ones(m)
        blocks = [
            (r0, ix[1:, 0], ones),
            (r0, ix[:-1, 0], (-1.0 + ts * (k1 + k2)) * ones),
            (r0, ix[:-1, 1], -ts * k2 * ones),
            (r0, ix[:-1, 2], -ts * b * s * ones),
            (r1, ix[1:, 1], ones),
            (r1, ix[:-1, 1], (-1.0 + ts * (k3 + k4)) * ones),
            (r1, ix[:-1, 0], -ts * k4 * ones),
            (r2, ix[1:, 2], ones),
            (r2, ix[:-1, 2], -ones),
            (r2, self.idx_xp, -ones),
            (r2, self.idx_xm, ones),
        ]
        dth = self._theta_columns(theta, x)
        for c, p in ((0, 0), (0, 1), (1, 2), (1, 3), (0, 4), (0, 5), (1, 6)):
            blocks.append((3 * k + c, np.full(m, self.idx_theta[p]), dth[:, c, p]))
        rows = np.concatenate([bl[0] for bl in blocks])
        cols = np.concatenate([bl[1] for bl in blocks])
        vals = np.concatenate([bl[2] for bl in blocks])
        return sp.csr_matrix((vals, (rows, cols)), shape=(self.n_con, self.size))

    def constraint_hess_vec(self, z, v) -> sp.csr_matrix:
        """sum_i v_i * Hessian(c_i); only theta-theta and theta-state entries are nonzero."""
        theta, x, _, _ = self.unpack(z)
        k1, k2, k3, k4, b, _, _ = self._rates(theta)
        ts, s = self.t_s, self.q_scale
        v = np.asarray(v).reshape(self.n - 1, N_STATES)
        v0, v1 = v[:, 0], v[:, 1]
        tz, tw, qs = x[:-1, 0], x[:-1, 1], x[:-1, 2]
        ta, qac = self.u[:-1, 0], self.u[:-1, 2]
        m = self.n - 1
        th = self.idx_theta
        diag = np.array(
            [
                -2.0 * ts * k1**3 * np.dot(ta - tz, v0),
                -2.0 * ts * k2**3 * np.dot(tw - tz, v0),
                -2.0 * ts * k3**3 * np.dot(ta - tw, v1),
                -2.0 * ts * k4**3 * np.dot(tz - tw, v1),
                -2.0 * ts * b**3 * np.dot(s * qs - qac, v0),
                0.0,
                0.0,
            ]
        )
        rows, cols, vals = [th], [th], [diag]
        ix = self.idx_x[:-1]
        cross = [
            (0, ix[:, 0], -ts * k1 * k1 * v0),
            (1, ix[:, 0], -ts * k2 * k2 * v0),
            (1, ix[:, 1], ts * k2 * k2 * v0),
            (2, ix[:, 1], -ts * k3 * k3 * v1),
            (3, ix[:, 0], ts * k4 * k4 * v1),
            (3, ix[:, 1], -ts * k4 * k4 * v1),
            (4, ix[:, 2], ts * b * b * s * v0),
        ]
        for p, cidx, val in cross:
            rows += [np.full(m, th[p]), cidx]
            cols += [cidx, np.full(m, th[p])]
            vals += [val, val]
        return sp.csr_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(self.size, self.size)
        )

    def lagrangian_hess(self, z, v, mu, h_obj=None) -> sp.csr_matrix:
        """Hessian of f + v.c + (mu/2)|c|^2 with v the current multiplier estimate."""
        h_obj = self.objective_hess() if h_obj is None else h_obj
        jac = self.jacobian(z)
        return (h_obj + self.constraint_hess_vec(z, v) + mu * (jac.T @ jac)).tocsr()
