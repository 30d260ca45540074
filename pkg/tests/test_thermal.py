import numpy as np
import pytest

from aggtherm.thermal import (
    BuildingModel,
    SignalTrace,
    ZoneInputs,
    ZoneParams,
    ZoneState,
    ZoneTraceSet,
    building_derivative,
    building_rhs,
    interaction_terms,
    simulate,
    step_forward_euler,
    zone_derivative,
)

from conftest import literal_building_rhs, literal_zone_rhs, random_zone, rk4


class TestZoneParams:
    def test_rejects_nonpositive_rc(self, nominal_zone):
        with pytest.raises(ValueError):
            nominal_zone.scaled(c_z=0.0)
        with pytest.raises(ValueError):
            ZoneParams(r_za=-1, c_z=1, r_zw=1, c_w=1, r_wa=1)

    def test_rejects_negative_aperture(self):
        with pytest.raises(ValueError):
            ZoneParams(r_za=1, c_z=1, r_zw=1, c_w=1, r_wa=1, a_z=-0.1)

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            ZoneParams(r_za=np.inf, c_z=1, r_zw=1, c_w=1, r_wa=1)

    def test_scaled(self, nominal_zone):
        z = nominal_zone.scaled(c_z=2.0)
        assert z.c_z == 2.0 * nominal_zone.c_z
        assert z.r_za == nominal_zone.r_za


class TestZoneDerivative:
    def test_equilibrium(self, nominal_zone):
        d = zone_derivative(ZoneState(24.0, 24.0), ZoneInputs(24.0), nominal_zone)
        assert d == (0.0, 0.0)

    def test_cooling_only(self):
        p = ZoneParams(r_za=1.0, c_z=0.5, r_zw=1.0, c_w=2.0, r_wa=3.0, a_z=0.4, a_w=2.0)
        d = zone_derivative(ZoneState(22.0, 22.0), ZoneInputs(22.0, q_ac=1.0), p)
        assert d == pytest.approx((-2.0, 0.0), abs=1e-15)

    def test_matches_literal_transcription(self, rng):
        for _ in range(50):
            p = random_zone(rng)
            s = ZoneState(*rng.normal(24, 3, 2))
            u = ZoneInputs(rng.normal(28, 4), *rng.uniform(0, 2, 3))
            want = literal_zone_rhs(s.t_z, s.t_w, u.t_a, u.eta_solar, u.q_ac, u.q_int, p)
            assert zone_derivative(s, u, p) == pytest.approx(want, rel=1e-13, abs=1e-13)

    def test_rejects_non_finite_inputs(self):
        with pytest.raises(ValueError):
            ZoneState(np.nan, 20.0)
        with pytest.raises(ValueError):
            ZoneInputs(np.inf)
        with pytest.raises(ValueError):
            ZoneInputs(20.0, q_ac=-1.0)

    def test_superposition_in_loads(self, nominal_zone):
        s, ta = ZoneState(23.0, 25.0), 30.0

        def dz(q_ac=0.0, q_int=0.0):
            return np.array(zone_derivative(s, ZoneInputs(ta, 0.3, q_ac, q_int), nominal_zone))

        a, b = 0.7, 1.9
        np.testing.assert_allclose(dz(q_ac=a + b) - dz(q_ac=a), dz(q_ac=b) - dz(), atol=1e-13)
        np.testing.assert_allclose(dz(q_int=a + b) - dz(q_int=a), dz(q_int=b) - dz(), atol=1e-13)


class TestBuildingModel:
    def test_asymmetric_interactions_rejected(self, nominal_zone):
        r = np.array([[np.inf, 1.0], [2.0, np.inf]])
        with pytest.raises(ValueError, match="symmetric"):
            BuildingModel((nominal_zone, nominal_zone), r)

    def test_nonpositive_interaction_rejected(self, nominal_zone):
        r = np.array([[np.inf, 0.0], [0.0, np.inf]])
        with pytest.raises(ValueError):
            BuildingModel((nominal_zone, nominal_zone), r)

    def test_wrong_shape_rejected(self, nominal_zone):
        with pytest.raises(ValueError):
            BuildingModel((nominal_zone, nominal_zone), np.ones((3, 3)))

    def test_absent_coupling_is_infinite(self, nominal_zone):
        m = BuildingModel((nominal_zone,) * 2, np.full((2, 2), np.inf))
        assert not m.has_interactions

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            BuildingModel(())


class TestBuildingDerivative:
    def test_single_zone_equals_zone_derivative(self, nominal_zone):
        s, u = ZoneState(22.0, 26.0), ZoneInputs(31.0, 0.5, 1.2, 0.8)
        out = building_derivative([s], [u], BuildingModel((nominal_zone,)))
        assert out[0] == zone_derivative(s, u, nominal_zone)

    def test_equal_temperatures_no_coupling_flow(self, nominal_zone):
        r = np.array([[np.inf, 0.5], [0.5, np.inf]])
        m = BuildingModel((nominal_zone, nominal_zone.scaled(c_z=2.0)), r)
        np.testing.assert_array_equal(interaction_terms(np.array([23.0, 23.0]), m), [0.0, 0.0])

    def test_hand_computed_coupling(self):
        p1 = ZoneParams(r_za=1.0, c_z=0.5, r_zw=1.0, c_w=2.0, r_wa=3.0)
        p2 = ZoneParams(r_za=1.0, c_z=2.0, r_zw=1.0, c_w=2.0, r_wa=3.0)
        r = np.array([[np.inf, 0.25], [0.25, np.inf]])
        coupled = BuildingModel((p1, p2), r)
        plain = BuildingModel((p1, p2))
        states = [ZoneState(20.0, 20.0), ZoneState(24.0, 20.0)]
        inputs = [ZoneInputs(20.0), ZoneInputs(20.0)]
        with_c = building_derivative(states, inputs, coupled)
        without = building_derivative(states, inputs, plain)
        # (24 - 20) / (0.25 * 0.5) = 32 into zone 1, (20 - 24) / (0.25 * 2) = -8 into zone 2
        assert with_c[0][0] - without[0][0] == pytest.approx(32.0)
        assert with_c[1][0] - without[1][0] == pytest.approx(-8.0)
        assert with_c[0][1] == without[0][1]

    def test_equal_capacitance_coupling_sums_to_zero(self, rng, nominal_zone):
        r = np.array([[np.inf, 0.7], [0.7, np.inf]])
        m = BuildingModel((nominal_zone, nominal_zone.scaled(r_za=1.5, a_z=0.2)), r)
        for _ in range(20):
            terms = interaction_terms(rng.normal(23, 2, 2), m)
            assert terms[0] + terms[1] == 0.0

    def test_matches_literal_transcription_with_coupling(self, rng):
        n = 4
        zones = tuple(random_zone(rng) for _ in range(n))
        r = rng.uniform(0.5, 3.0, (n, n))
        r = np.triu(r, 1) + np.triu(r, 1).T
        r[0, 3] = r[3, 0] = np.inf
        m = BuildingModel(zones, r)
        x = rng.normal(24, 2, 2 * n)
        u = (rng.normal(28, 3, n), rng.uniform(0, 1, n), rng.uniform(0, 2, n), rng.uniform(0, 2, n))
        dtz, dtw = building_rhs(x[:n], x[n:], *u, m)
        np.testing.assert_allclose(np.concatenate([dtz, dtw]), literal_building_rhs(x, u, m), rtol=1e-12, atol=1e-12)

    def test_length_mismatch(self, nominal_zone):
        with pytest.raises(ValueError):
            building_derivative([ZoneState(1, 1)], [], BuildingModel((nominal_zone,)))


class TestEuler:
    def test_fixed_point(self, nominal_zone):
        m = BuildingModel((nominal_zone,))
        out = step_forward_euler([ZoneState(24.0, 24.0)], [ZoneInputs(24.0)], m, 0.25)
        assert out[0] == ZoneState(24.0, 24.0)

    def test_one_step(self):
        p = ZoneParams(r_za=1.0, c_z=0.5, r_zw=1.0, c_w=2.0, r_wa=3.0)
        out = step_forward_euler([ZoneState(22.0, 22.0)], [ZoneInputs(22.0, q_ac=1.0)], BuildingModel((p,)), 0.25)
        assert out[0].t_z == pytest.approx(21.5)
        assert out[0].t_w == 22.0

    def test_nonpositive_step_rejected(self, nominal_zone):
        with pytest.raises(ValueError):
            step_forward_euler([ZoneState(1, 1)], [ZoneInputs(1)], BuildingModel((nominal_zone,)), 0.0)

    def test_first_order_convergence_against_rk4(self, nominal_zone):
        # smooth inputs, 2 coupled zones
        m = BuildingModel((nominal_zone, nominal_zone.scaled(c_z=1.6, r_za=0.7)), np.array([[np.inf, 2.0], [2.0, np.inf]]))
        n = m.n_zones
        hours = 24.0

        def u_of_t(t):
            ta = 26.0 + 4.0 * np.cos(2 * np.pi * (t - 15.0) / 24.0)
            eta = 0.4 * (1.0 + np.sin(2 * np.pi * t / 24.0))
            q = 1.0 + 0.5 * np.sin(2 * np.pi * t / 12.0)
            return (np.full(n, ta), np.full(n, eta), np.array([q, 0.5 * q]), np.array([0.6, 0.9]))

        def rhs(x, u):
            return literal_building_rhs(x, u, m)

        x0 = np.array([23.0, 25.0, 24.0, 24.0])
        ref = rk4(rhs, x0, 1.0 / 480.0, int(hours * 480), u_of_t)

        def euler_error(t_s):
            k = int(round(hours / t_s))
            t = np.arange(k) * t_s
            arr = np.array([u_of_t(tt) for tt in t])
            traces = ZoneTraceSet(t_s=t_s, t_a=arr[:, 0], eta_solar=arr[:, 1], q_ac=arr[:, 2], q_int=arr[:, 3], t_z=arr[:, 0])
            sim = simulate(m, traces, x0.reshape(2, n).T)
            stride = int(round(t_s * 480))
            want = ref[: k * stride : stride]
            got = np.hstack([sim.t_z, sim.t_w])
            return np.max(np.abs(got - want))

        ratio = euler_error(1.0 / 12.0) / euler_error(1.0 / 24.0)
        assert 1.7 <= ratio <= 2.3


class TestSimulate:
    def _inputs(self, n_t, n_z, t_a=24.0, q_ac=0.0, t_s=1.0 / 12.0):
        return ZoneTraceSet(
            t_s=t_s,
            t_z=np.zeros((n_t, n_z)),
            t_a=np.full((n_t, n_z), t_a),
            eta_solar=np.zeros((n_t, n_z)),
            q_ac=np.full((n_t, n_z), q_ac),
        )

    def test_equilibrium_constant(self, nominal_zone):
        m = BuildingModel((nominal_zone,) * 3)
        out = simulate(m, self._inputs(50, 3), np.full((3, 2), 24.0))
        assert np.all(out.t_z == 24.0) and np.all(out.t_w == 24.0)

    def test_step_matches_single_exponential(self):
        # huge wall capacitance freezes T_w
        p = ZoneParams(r_za=1.0, c_z=0.5, r_zw=2.0, c_w=1e12, r_wa=3.0)
        m = BuildingModel((p,))
        t_s = 1.0 / 600.0
        n_t = 1200
        out = simulate(m, self._inputs(n_t, 1, t_a=24.0, q_ac=1.5, t_s=t_s), [[24.0, 24.0]])
        # dT/dt = (Ta - T)/(Rza Cz) + (Tw - T)/(Rzw Cz) - q/Cz, with Ta = Tw = 24
        g = 1.0 / (p.r_za * p.c_z) + 1.0 / (p.r_zw * p.c_z)
        t_inf = 24.0 - 1.5 / p.c_z / g
        t = np.arange(n_t) * t_s
        exact = t_inf + (24.0 - t_inf) * np.exp(-g * t)
        tz = out.t_z[:, 0]
        assert np.all(np.diff(tz) < 0)
        assert np.all(tz >= t_inf)
        assert np.max(np.abs(tz - exact)) < 2e-3

    def test_homogeneous_zones_identical(self, homo_building):
        n = homo_building.n_zones
        rng = np.random.default_rng(3)
        base = rng.uniform(0, 1, (40, 1))
        tr = ZoneTraceSet(
            t_s=1 / 12,
            t_z=np.zeros((40, n)),
            t_a=26 + base.repeat(n, 1),
            eta_solar=base.repeat(n, 1),
            q_ac=2 * base.repeat(n, 1),
            q_int=base.repeat(n, 1),
        )
        out = simulate(homo_building, tr, np.full((n, 2), 23.0))
        for j in range(1, n):
            np.testing.assert_array_equal(out.t_z[:, j], out.t_z[:, 0])

    def test_deterministic(self, hetero_building):
        tr = self._inputs(30, hetero_building.n_zones, q_ac=0.5)
        a = simulate(hetero_building, tr, np.full((5, 2), 22.0))
        b = simulate(hetero_building, tr, np.full((5, 2), 22.0))
        np.testing.assert_array_equal(a.t_z, b.t_z)

    def test_length_and_grid_checks(self, nominal_zone):
        m = BuildingModel((nominal_zone,))
        tr = self._inputs(10, 1)
        assert simulate(m, tr, [[24.0, 24.0]], n_t=4).n_t == 4
        with pytest.raises(ValueError):
            simulate(m, tr, [[24.0, 24.0]], n_t=11)
        with pytest.raises(ValueError):
            simulate(m, tr, [[24.0, 24.0]], t_s=0.5)
        with pytest.raises(ValueError):
            simulate(BuildingModel((nominal_zone,) * 2), tr, np.zeros((2, 2)))

    def test_trace_set_shape_mismatch(self):
        with pytest.raises(ValueError):
            ZoneTraceSet(t_s=1.0, t_z=np.zeros((4, 2)), t_a=np.zeros((5, 2)), eta_solar=np.zeros((4, 2)), q_ac=np.zeros((4, 2)))

    def test_signal_trace(self):
        import datetime as dt

        s = SignalTrace(dt.datetime(2018, 9, 21), 0.5, [1.0, 2.0, 3.0])
        assert len(s) == 3
        np.testing.assert_array_equal(s.times, [0.0, 0.5, 1.0])
        with pytest.raises(ValueError):
            SignalTrace(dt.datetime(2018, 9, 21), 0.5, [])
