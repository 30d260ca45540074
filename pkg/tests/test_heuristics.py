import numpy as np
import pytest

from aggtherm.aggregation import deviation_signals
from aggtherm.heuristics import sample_mean, sample_variance, sliding_mean, variance_report
from aggtherm.scenarios import generate, open_loop_spec
from aggtherm.thermal import ZoneTraceSet

from conftest import random_traces


class TestSampleStats:
    def test_mean_of_deviations_is_zero(self, open_loop_scenario):
        for arr in deviation_signals(open_loop_scenario.zones).values():
            assert np.max(np.abs(sample_mean(arr))) <= 1e-12

    def test_two_values(self):
        # deviations of {1, 3} about their mean are {-1, 1}
        assert sample_variance([[-1.0, 1.0]])[0] == 2.0
        assert sample_variance([[1.0, 3.0]], full=True)[0] == 2.0

    def test_zero_mean_and_full_forms_agree_on_deviations(self, rng):
        x = rng.normal(size=(30, 5))
        dev = x - x.mean(axis=1, keepdims=True)
        np.testing.assert_allclose(sample_variance(dev), sample_variance(dev, full=True), rtol=1e-12)
        np.testing.assert_allclose(sample_variance(x, full=True), np.var(x, axis=1, ddof=1), rtol=1e-12)

    def test_single_zone_undefined(self):
        assert np.all(np.isnan(sample_variance(np.zeros((4, 1)))))

    def test_shape_errors(self):
        with pytest.raises(ValueError):
            sample_mean(np.zeros(3))
        with pytest.raises(ValueError):
            sample_variance(np.zeros(3))


class TestSlidingMean:
    def test_values(self):
        np.testing.assert_allclose(sliding_mean([1.0, 2.0, 3.0, 4.0], 2), [1.0, 1.5, 2.5, 3.5])

    def test_matches_convolution(self, rng):
        x = rng.normal(size=50)
        w = 7
        full = np.convolve(x, np.ones(w) / w, mode="valid")
        np.testing.assert_allclose(sliding_mean(x, w)[w - 1 :], full, rtol=1e-12)

    def test_window_one_identity(self, rng):
        x = rng.normal(size=10)
        np.testing.assert_allclose(sliding_mean(x, 1), x)

    def test_bad_window(self):
        with pytest.raises(ValueError):
            sliding_mean([1.0], 0)


class TestVarianceReport:
    def test_synchronous_homogeneous_near_zero(self, homo_building):
        sc = generate(open_loop_spec(building=homo_building, asynchronicity=0.0))
        rep = variance_report(sc.zones, kinds=("t_z", "q_int"), scales={"t_z": 1.0, "q_int": 1.0})
        assert np.max(rep.index) <= 1e-20

    def test_day_exceeds_night(self, open_loop_scenario):
        z = open_loop_scenario.zones
        rep = variance_report(z)
        hours = np.mod(np.arange(z.n_t) * z.t_s, 24.0)
        day = (hours >= 9) & (hours < 18)
        night = (hours < 6) | (hours >= 22)
        assert rep.index[day].mean() > 3 * rep.index[night].mean()

    def test_default_scale_normalises_to_one(self, open_loop_scenario):
        rep = variance_report(open_loop_scenario.zones)
        assert rep.scales["t_z"] > 0
        for kind in (k for k in rep.kinds if rep.scales[k] > 0):
            assert np.max(rep.windowed[kind] / rep.scales[kind]) == pytest.approx(1.0)
        assert rep.window == 12

    def test_missing_kinds(self, rng):
        tr = random_traces(rng, 20, 3, with_states=False)
        rep = variance_report(tr, kinds=("t_z", "t_w"))
        assert rep.available == {"t_z": True, "t_w": False}
        assert rep.kinds == ("t_z",)

    def test_single_zone(self, rng):
        rep = variance_report(random_traces(rng, 20, 1))
        assert not any(rep.available.values())
        assert np.all(np.isnan(rep.index))

    def test_unknown_kind(self, open_loop_scenario):
        with pytest.raises(ValueError):
            variance_report(open_loop_scenario.zones, kinds=("pressure",))

    def test_matches_hand_computation(self):
        t_z = np.array([[20.0, 22.0], [21.0, 21.0], [19.0, 23.0]])
        tr = ZoneTraceSet(t_s=1.0, t_z=t_z, t_a=np.zeros((3, 2)), eta_solar=np.zeros((3, 2)), q_ac=np.zeros((3, 2)))
        rep = variance_report(tr, kinds=("t_z",), window_hours=2.0, scales={"t_z": 1.0})
        np.testing.assert_allclose(rep.variance["t_z"], [2.0, 0.0, 8.0])
        np.testing.assert_allclose(rep.index, [2.0, 1.0, 4.0])
