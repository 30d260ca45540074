"""Sample statistics of deviation signals as a proxy for aggregation error.

Large cross-zone spread in the measurable signals (zone temperature and
cooling rate) flags the periods where the estimated aggregate load is
expected to depart from the average internal load.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .aggregation import deviation_signals
from .thermal import ZoneTraceSet

DEFAULT_KINDS = ("t_z", "q_ac")
ALL_KINDS = ("t_a", "t_z", "t_w", "eta_solar", "q_ac", "q_int")


def sample_mean(tildes) -> np.ndarray:
    """Mean over zones (axis 1) of deviation traces of shape (N_t, N_z)."""
    tildes = np.asarray(tildes, dtype=float)
    if tildes.ndim != 2 or tildes.shape[1] < 1:
        raise ValueError("expected traces of shape (N_t, N_z) with N_z >= 1")
    return np.mean(tildes, axis=1)


def sample_variance(tildes, full: bool = False) -> np.ndarray:
    """Unbiased variance over zones of deviation traces.

    By default the mean is taken to be zero, which holds for deviations from
    the zone average. ``full=True`` subtracts the sample mean first. Returns
    NaN for every sample when fewer than two zones are given.
    """
    tildes = np.asarray(tildes, dtype=float)
    if tildes.ndim != 2:
        raise ValueError("expected traces of shape (N_t, N_z)")
    n_t, n_z = tildes.shape
    if n_z < 2:
        return np.full(n_t, np.nan)
    dev = tildes - np.mean(tildes, axis=1, keepdims=True) if full else tildes
    return np.sum(dev * dev, axis=1) / (n_z - 1)


def sliding_mean(x, window: int) -> np.ndarray:
    """Trailing moving average; the first ``window - 1`` samples use what is available."""
    x = np.asarray(x, dtype=float)
    if window < 1:
        raise ValueError("window must be at least one sample")
    c = np.concatenate([[0.0], np.cumsum(x)])
    k = np.arange(1, x.size + 1)
    lo = np.maximum(k - window, 0)
    return (c[k] - c[lo]) / (k - lo)


@dataclass(frozen=True, eq=False)
class VarianceReport:
    """Variance traces per kind, their windowed means and the combined index.

    ``available`` is False for kinds that were requested but are missing from
    the traces, or for every kind when there are fewer than two zones.
    """

    t_s: float
    window: int
    variance: dict
    windowed: dict
    available: dict
    scales: dict
    index: np.ndarray

    @property
    def kinds(self):
        return tuple(k for k, ok in self.available.items() if ok)


def variance_report(
    zones: ZoneTraceSet,
    kinds=DEFAULT_KINDS,
    window_hours: float = 1.0,
    scales: dict | None = None,
) -> VarianceReport:
    """Per-sample variances and a windowed asynchronicity index.

    Each windowed variance is divided by a scale before summing into the
    index. The default scale is the trace's own peak; pass ``scales`` to share
    one normalisation across several datasets so their indices compare.
    """
    unknown = set(kinds) - set(ALL_KINDS)
    if unknown:
        raise ValueError(f"unknown signal kinds {sorted(unknown)}")
    window = max(int(round(window_hours / zones.t_s)), 1)
    tildes = deviation_signals(zones)
    enough = zones.n_zones >= 2
    variance, windowed, available, used = {}, {}, {}, {}
    index = np.zeros(zones.n_t)
    for kind in kinds:
        ok = enough and kind in tildes
        available[kind] = ok
        if not ok:
            continue
        v = sample_variance(tildes[kind])
        w = sliding_mean(v, window)
        variance[kind], windowed[kind] = v, w
        s = scales.get(kind) if scales else None
        if s is None:
            s = float(np.max(w))
        used[kind] = s
        if s > 0:
            index += w / s
    if not any(available.values()):
        index = np.full(zones.n_t, np.nan)
    return VarianceReport(zones.t_s, window, variance, windowed, available, used, index)
