import numpy as np
import pytest
import scipy.sparse as sp

from aggtherm.estimation.problem import BANDWIDTH
from aggtherm.estimation.solver import (
    ALOptions,
    ArrowSolver,
    augmented_lagrangian,
    cancel_split_pairs,
    project,
    projected_gradient,
    projected_newton,
    sparse_solve,
)

from test_problem import make_problem, random_point


class HyperbolaProblem:
    """min x^2 + y^2 subject to x y = 1, x, y >= 0; solution (1, 1)."""

    n_con = 1

    def objective(self, z):
        return float(z @ z)

    def objective_grad(self, z):
        return 2.0 * z

    def objective_hess(self):
        return sp.identity(2, format="csr") * 2.0

    def constraints(self, z):
        return np.array([z[0] * z[1] - 1.0])

    def jac_t_vec(self, z, v):
        return v[0] * np.array([z[1], z[0]])

    def lagrangian_hess(self, z, y_eff, mu, h_obj=None):
        j = np.array([[z[1], z[0]]])
        h = 2.0 * np.eye(2) + y_eff[0] * np.array([[0.0, 1.0], [1.0, 0.0]]) + mu * j.T @ j
        return sp.csr_matrix(h)


class LineProblem(HyperbolaProblem):
    """min (x-2)^2 + (y-1)^2 subject to x + y = 1, y >= 0.2; solution (0.8, 0.2)."""

    target = np.array([2.0, 1.0])

    def objective(self, z):
        d = z - self.target
        return float(d @ d)

    def objective_grad(self, z):
        return 2.0 * (z - self.target)

    def constraints(self, z):
        return np.array([z[0] + z[1] - 1.0])

    def jac_t_vec(self, z, v):
        return v[0] * np.ones(2)

    def lagrangian_hess(self, z, y_eff, mu, h_obj=None):
        return sp.csr_matrix(2.0 * np.eye(2) + mu * np.ones((2, 2)))


class TestProjection:
    def test_project(self):
        np.testing.assert_array_equal(project(np.array([-1.0, 0.5, 3.0]), 0.0, 1.0), [0.0, 0.5, 1.0])

    def test_projected_gradient_zero_at_active_bound(self):
        z = np.array([0.0, 0.5])
        g = np.array([2.0, 0.0])
        np.testing.assert_array_equal(projected_gradient(z, g, 0.0, np.inf), [0.0, 0.0])
        assert projected_gradient(z, -g, 0.0, np.inf)[0] == -2.0

    def test_cancel_split_pairs(self):
        z = np.array([0.5, 0.2, 0.1, 0.4, 7.0])
        out = cancel_split_pairs(z, (np.array([0, 2]), np.array([1, 3])))
        np.testing.assert_allclose(out, [0.3, 0.0, 0.0, 0.3, 7.0])
        assert cancel_split_pairs(z, None) is z


class TestLinearSolvers:
    def banded_arrow(self, rng, nb=30, m=4, bw=3):
        n = nb + m
        a = np.zeros((n, n))
        for i in range(nb):
            for j in range(max(0, i - bw), min(nb, i + bw + 1)):
                a[i, j] = rng.normal()
        a[:, nb:] = rng.normal(size=(n, m))
        a[nb:, :] = rng.normal(size=(m, n))
        a = a + a.T + 4 * n * np.eye(n)
        return sp.csr_matrix(a)

    def test_arrow_matches_dense(self, rng):
        h = self.banded_arrow(rng)
        n = h.shape[0]
        rhs = rng.normal(size=n)
        held = np.zeros(n, bool)
        held[[2, 11, 31]] = True
        d = ArrowSolver(30, 3)(h, rhs, held, 0.5)
        free = ~held
        dense = h.toarray()[np.ix_(free, free)] + 0.5 * np.eye(free.sum())
        want = np.zeros(n)
        want[free] = np.linalg.solve(dense, rhs[free])
        np.testing.assert_allclose(d, want, rtol=1e-10, atol=1e-12)
        np.testing.assert_array_equal(d[held], 0.0)

    def test_arrow_matches_sparse_lu(self, rng):
        h = self.banded_arrow(rng)
        rhs = rng.normal(size=h.shape[0])
        held = rng.random(h.shape[0]) < 0.2
        np.testing.assert_allclose(ArrowSolver(30, 3)(h, rhs, held, 0.0), sparse_solve(h, rhs, held, 0.0), rtol=1e-9, atol=1e-12)

    def test_arrow_on_problem_hessian(self, rng):
        p = make_problem(rng)
        z = random_point(p, rng)
        h = p.lagrangian_hess(z, rng.normal(size=p.n_con), 100.0)
        rhs = rng.normal(size=p.size)
        held = np.zeros(p.size, bool)
        held[p.idx_xm] = True
        a = ArrowSolver(p.n_band, BANDWIDTH)(h, rhs, held, 1.0)
        b = sparse_solve(h, rhs, held, 1.0)
        np.testing.assert_allclose(a, b, rtol=1e-8, atol=1e-10)

    def test_bandwidth_violation(self, rng):
        h = self.banded_arrow(rng, bw=5)
        with pytest.raises(ValueError):
            ArrowSolver(30, 3)(h, np.ones(h.shape[0]), np.zeros(h.shape[0], bool), 0.0)


class TestProjectedNewton:
    def test_box_qp(self, rng):
        # strictly convex QP, compare against the KKT conditions
        n = 8
        m = rng.normal(size=(n, n))
        q = m @ m.T + n * np.eye(n)
        b = rng.normal(size=n) * 200
        lo, hi = -np.ones(n), np.ones(n)

        def fun(z):
            return 0.5 * z @ q @ z - b @ z, q @ z - b

        res = projected_newton(fun, lambda z: sp.csr_matrix(q), np.zeros(n), lo, hi, gtol=1e-10)
        assert res.converged
        g = q @ res.z - b
        assert np.max(np.abs(projected_gradient(res.z, g, lo, hi))) <= 1e-10
        assert np.any(np.abs(res.z) == 1.0)
        assert res.value <= res.start_value

    def test_unconstrained_quadratic_one_step(self, rng):
        q = np.diag([1.0, 4.0, 9.0])
        b = np.array([1.0, 2.0, 3.0])
        res = projected_newton(
            lambda z: (0.5 * z @ q @ z - b @ z, q @ z - b), lambda z: sp.csr_matrix(q), np.zeros(3), -np.inf, np.inf
        )
        np.testing.assert_allclose(res.z, np.linalg.solve(q, b), rtol=1e-12)
        assert res.iterations == 1

    def test_split_pair_linear_penalty(self):
        # min (p - m - 0.3)^2 + 0.1 (p + m), p, m >= 0: p = 0.25, m = 0
        def fun(z):
            r = z[0] - z[1] - 0.3
            return r * r + 0.1 * (z[0] + z[1]), np.array([2 * r + 0.1, -2 * r + 0.1])

        h = sp.csr_matrix(np.array([[2.0, -2.0], [-2.0, 2.0]]))
        res = projected_newton(fun, lambda z: h, np.array([1.0, 1.0]), 0.0, np.inf, gtol=1e-12, pairs=([0], [1]))
        assert res.converged
        np.testing.assert_allclose(res.z, [0.25, 0.0], atol=1e-12)


class TestAugmentedLagrangian:
    def test_nonlinear_equality(self):
        res = augmented_lagrangian(HyperbolaProblem(), np.array([3.0, 0.5]), np.zeros(2), np.full(2, np.inf))
        assert res.converged
        np.testing.assert_allclose(res.z, [1.0, 1.0], atol=1e-6)
        # stationarity: 2 z + y grad c = 0 gives y = -2
        assert res.multipliers[0] == pytest.approx(-2.0, abs=1e-5)

    def test_active_bound(self):
        lo = np.array([-np.inf, 0.2])
        res = augmented_lagrangian(LineProblem(), np.zeros(2), lo, np.full(2, np.inf))
        assert res.converged
        np.testing.assert_allclose(res.z, [0.8, 0.2], atol=1e-7)
        assert res.constraint_norm <= 1e-8

    def test_merit_decreases_within_each_outer_iteration(self, rng):
        p = make_problem(rng, n=40)
        lo, hi = np.full(p.size, -np.inf), np.full(p.size, np.inf)
        lo[p.i_theta] = 0.01
        lo[p.idx_x[:, 2]] = 0.0
        lo[p.idx_xp] = lo[p.idx_xm] = 0.0
        z0 = random_point(p, rng)
        res = augmented_lagrangian(p, z0, lo, hi, ALOptions(), pairs=(p.idx_xp, p.idx_xm), linsolve=ArrowSolver(p.n_band, BANDWIDTH))
        assert res.history
        for h in res.history:
            assert h["merit_end"] <= h["merit_start"] + 1e-12 * max(1.0, abs(h["merit_start"]))
        assert res.converged
        assert res.constraint_norm <= 1e-8

    def test_iteration_cap(self):
        res = augmented_lagrangian(HyperbolaProblem(), np.array([3.0, 0.5]), np.zeros(2), np.full(2, np.inf), ALOptions(max_outer=1))
        assert res.outer_iterations == 1
        assert len(res.history) == 1
