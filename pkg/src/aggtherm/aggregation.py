"""Zone averaging, deviation signals and the time-invariant aggregate model.

The aggregate model keeps the 2R2C structure, with parameters built from
harmonic/arithmetic means over zones and two additive aggregation-error
signals that make the averaged dynamics exact.
"""

from __future__ import annotations

import datetime as dt
from dataclasses import astuple, dataclass, fields

import numpy as np

from .thermal import DEFAULT_START, BuildingModel, SignalTrace, ZoneTraceSet, building_rhs

UNDEFINED_EPS = 1e-9

# kind in a ZoneTraceSet -> attribute of AggregateData
_AVG_NAMES = {
    "t_z": "t_bar_z",
    "t_w": "t_bar_w",
    "t_a": "t_bar_a",
    "eta_solar": "eta_bar_solar",
    "q_ac": "q_bar_ac",
    "q_int": "q_bar_int",
}


def _zone_mean(arr: np.ndarray) -> np.ndarray:
    # index-ordered sum, independent of numpy's pairwise reduction
    acc = np.zeros(arr.shape[0])
    for j in range(arr.shape[1]):
        acc = acc + arr[:, j]
    return acc / arr.shape[1]


@dataclass(frozen=True, eq=False)
class AggregateData:
    """Zone-averaged signals on one grid (1-d arrays of length N_t).

    ``t_bar_w`` and ``q_bar_int`` are only known for simulated buildings.
    """

    t_s: float
    t_bar_z: np.ndarray
    t_bar_a: np.ndarray
    eta_bar_solar: np.ndarray
    q_bar_ac: np.ndarray
    t_bar_w: np.ndarray | None = None
    q_bar_int: np.ndarray | None = None
    start_time: dt.datetime = DEFAULT_START
    n_zones: int = 1

    def __post_init__(self):
        n = None
        for f in ("t_bar_z", "t_bar_a", "eta_bar_solar", "q_bar_ac", "t_bar_w", "q_bar_int"):
            v = getattr(self, f)
            if v is None:
                continue
            v = np.array(v, dtype=float).reshape(-1)
            if n is None:
                n = v.size
            elif v.size != n:
                raise ValueError(f"{f} has {v.size} samples, expected {n}")
            v.setflags(write=False)
            object.__setattr__(self, f, v)

    @property
    def n_t(self) -> int:
        return self.t_bar_z.size

    def trace(self, name: str) -> SignalTrace:
        return SignalTrace(self.start_time, self.t_s, getattr(self, name))

    @property
    def inputs(self) -> np.ndarray:
        """Measured input matrix u[k] = (T_a, eta_solar, q_ac), shape (N_t, 3)."""
        return np.column_stack([self.t_bar_a, self.eta_bar_solar, self.q_bar_ac])

    def slice(self, start: int, stop: int) -> "AggregateData":
        kw = {}
        for f in ("t_bar_z", "t_bar_a", "eta_bar_solar", "q_bar_ac", "t_bar_w", "q_bar_int"):
            v = getattr(self, f)
            kw[f] = None if v is None else v[start:stop]
        t0 = self.start_time + dt.timedelta(hours=start * self.t_s)
        return AggregateData(t_s=self.t_s, start_time=t0, n_zones=self.n_zones, **kw)


@dataclass(frozen=True)
class AggregateParams:
    """Identifiable aggregate parameters, in the order of the parameter vector.

    Time constants in h, ``c_z`` in kWh/degC, solar gains in degC*m2/kWh.
    """

    tau_za: float
    tau_zw: float
    tau_wa: float
    tau_wz: float
    c_z: float
    a_z: float
    a_w: float

    def __post_init__(self):
        for f in fields(self):
            v = float(getattr(self, f.name))
            if not (np.isfinite(v) and v > 0):
                raise ValueError(f"AggregateParams.{f.name} must be finite and > 0, got {v}")
            object.__setattr__(self, f.name, v)

    def to_array(self) -> np.ndarray:
        return np.array(astuple(self))

    @classmethod
    def from_array(cls, theta) -> "AggregateParams":
        return cls(*np.asarray(theta, dtype=float).tolist())

    @classmethod
    def names(cls) -> tuple[str, ...]:
        return tuple(f.name for f in fields(cls))


PARAM_UNITS = {
    "tau_za": "h",
    "tau_zw": "h",
    "tau_wa": "h",
    "tau_wz": "h",
    "c_z": "kWh/degC",
    "a_z": "degC*m2/kWh",
    "a_w": "degC*m2/kWh",
}


@dataclass(frozen=True, eq=False)
class AggregationErrors:
    """Aggregation-error signals (degC/h) and the aggregate internal load (kW)."""

    t_s: float
    w_tilde_z: np.ndarray
    w_tilde_w: np.ndarray
    q_bar_agg: np.ndarray | None


def average_signals(zones: ZoneTraceSet) -> AggregateData:
    """Per-sample unweighted means over zones of every available signal."""
    if zones.n_zones < 1:
        raise ValueError("empty zone set")
    kw = {}
    for kind, name in _AVG_NAMES.items():
        arr = getattr(zones, kind)
        kw[name] = None if arr is None else _zone_mean(arr)
    return AggregateData(t_s=zones.t_s, start_time=zones.start_time, n_zones=zones.n_zones, **kw)


def deviation_signals(zones: ZoneTraceSet, avg: AggregateData | None = None) -> dict[str, np.ndarray]:
    """Zone signal minus zone average, per kind; arrays of shape (N_t, N_z)."""
    avg = average_signals(zones) if avg is None else avg
    if avg.n_t != zones.n_t:
        raise ValueError("aggregate data and zone traces are on different grids")
    out = {}
    for kind, name in _AVG_NAMES.items():
        arr = getattr(zones, kind)
        bar = getattr(avg, name)
        if arr is not None and bar is not None:
            out[kind] = arr - bar[:, None]
    return out


def aggregate_params(model: BuildingModel) -> AggregateParams:
    n = model.n_zones
    r_za, c_z, r_zw = (model.param_array(k) for k in ("r_za", "c_z", "r_zw"))
    c_w, r_wa, a_z, a_w = (model.param_array(k) for k in ("c_w", "r_wa", "a_z", "a_w"))

    def harmonic(x):
        return n / np.sum(1.0 / x)

    return AggregateParams(
        tau_za=harmonic(r_za * c_z),
        tau_zw=harmonic(r_zw * c_z),
        tau_wa=harmonic(r_wa * c_w),
        tau_wz=harmonic(r_zw * c_w),
        c_z=harmonic(c_z),
        a_z=np.sum(a_z / c_z) / n,
        a_w=np.sum(a_w / c_w) / n,
    )


def aggregate_wall_capacitance(model: BuildingModel) -> float:
    c_w = model.param_array("c_w")
    return model.n_zones / np.sum(1.0 / c_w)


def interaction_correction(t_z_tilde: np.ndarray, model: BuildingModel) -> np.ndarray:
    """Zone-averaged coupling term added to the zone aggregation error.

    Pairs are accumulated together so that with equal zone capacitances each
    pair cancels exactly.
    """
    n = model.n_zones
    out = np.zeros(t_z_tilde.shape[0])
    if not model.has_interactions:
        return out
    r = model.interaction_resistance
    c_z = model.param_array("c_z")
    for i in range(n):
        for j in range(i + 1, n):
            if not np.isfinite(r[i, j]):
                continue
            d = t_z_tilde[:, i] - t_z_tilde[:, j]
            out = out + (d / (r[i, j] * c_z[j]) + (-d) / (r[i, j] * c_z[i]))
    return out / n


def aggregation_errors(
    model: BuildingModel,
    zones: ZoneTraceSet,
    tildes: dict[str, np.ndarray] | None = None,
    params: AggregateParams | None = None,
) -> AggregationErrors:
    """Aggregation errors of the zone and wall equations and the aggregate load.

    Needs every zone's parameters and full simulated signals, including wall
    temperatures. ``q_bar_agg`` is ``None`` when the zone loads are unknown.
    """
    if zones.t_w is None:
        raise ValueError("aggregation errors need wall temperatures (simulation data)")
    if zones.n_zones != model.n_zones:
        raise ValueError("zone count mismatch between model and traces")
    tildes = deviation_signals(zones) if tildes is None else tildes
    params = aggregate_params(model) if params is None else params
    n = model.n_zones
    r_za, c_z, r_zw = (model.param_array(k) for k in ("r_za", "c_z", "r_zw"))
    c_w, r_wa, a_z, a_w = (model.param_array(k) for k in ("c_w", "r_wa", "a_z", "a_w"))

    tz, tw, ta = tildes["t_z"], tildes["t_w"], tildes["t_a"]
    eta, qac = tildes["eta_solar"], tildes["q_ac"]
    qint = tildes.get("q_int", np.zeros_like(tz))

    wz = np.zeros(zones.n_t)
    ww = np.zeros(zones.n_t)
    for j in range(n):
        wz = wz + (
            (ta[:, j] - tz[:, j]) / (r_za[j] * c_z[j])
            + (tw[:, j] - tz[:, j]) / (r_zw[j] * c_z[j])
            + (qint[:, j] - qac[:, j] + a_z[j] * eta[:, j]) / c_z[j]
        )
        ww = ww + (
            (ta[:, j] - tw[:, j]) / (r_wa[j] * c_w[j])
            + (tz[:, j] - tw[:, j]) / (r_zw[j] * c_w[j])
            + a_w[j] / c_w[j] * eta[:, j]
        )
    wz = wz / n + interaction_correction(tz, model)
    ww = ww / n

    q_agg = None
    if zones.q_int is not None:
        q_agg = _zone_mean(zones.q_int) + wz * params.c_z
    return AggregationErrors(t_s=zones.t_s, w_tilde_z=wz, w_tilde_w=ww, q_bar_agg=q_agg)


def reconstruct_average_dynamics(
    params: AggregateParams, data: AggregateData, errors: AggregationErrors
) -> tuple[np.ndarray, np.ndarray]:
    """Evaluate the time-invariant aggregate model sample by sample.

    Returns the predicted derivatives of the average zone and wall
    temperatures, including the aggregation-error terms.
    """
    if data.t_bar_w is None:
        raise ValueError("average wall temperature required")
    q_int = data.q_bar_int if data.q_bar_int is not None else np.zeros(data.n_t)
    p = params
    tz, tw, ta = data.t_bar_z, data.t_bar_w, data.t_bar_a
    dtz = (
        (ta - tz) / p.tau_za
        + (tw - tz) / p.tau_zw
        + (q_int - data.q_bar_ac) / p.c_z
        + p.a_z * data.eta_bar_solar
        + errors.w_tilde_z
    )
    dtw = (ta - tw) / p.tau_wa + (tz - tw) / p.tau_wz + p.a_w * data.eta_bar_solar + errors.w_tilde_w
    return dtz, dtw


def average_zone_derivatives(model: BuildingModel, zones: ZoneTraceSet) -> tuple[np.ndarray, np.ndarray]:
    """Zone-averaged per-zone derivatives along a trace set, shape (N_t,) each."""
    q_int = zones.q_int if zones.q_int is not None else np.zeros_like(zones.q_ac)
    dtz, dtw = building_rhs(zones.t_z.T, zones.t_w.T, zones.t_a.T, zones.eta_solar.T, zones.q_ac.T, q_int.T, model)
    return _zone_mean(dtz.T), _zone_mean(dtw.T)


def time_varying_params(zones: ZoneTraceSet, model: BuildingModel, eps: float = UNDEFINED_EPS) -> dict[str, np.ndarray]:
    """Per-sample 'parameters' that keep the single-zone form for averaged signals.

    Samples whose numerator or denominator magnitude falls below ``eps`` are
    undefined and set to NaN.
    """
    if zones.t_w is None:
        raise ValueError("wall temperatures required")
    n = model.n_zones
    c_z, c_w = model.param_array("c_z"), model.param_array("c_w")
    res = {"z": c_z, "w": c_w}
    rc = {
        ("z", "a"): model.param_array("r_za") * c_z,
        ("z", "w"): model.param_array("r_zw") * c_z,
        ("w", "a"): model.param_array("r_wa") * c_w,
        ("w", "z"): model.param_array("r_zw") * c_w,
    }
    temps = {"z": zones.t_z, "w": zones.t_w, "a": zones.t_a}

    def ratio(num, den):
        out = np.full(num.shape, np.nan)
        ok = (np.abs(num) >= eps) & (np.abs(den) >= eps)
        out[ok] = num[ok] / den[ok]
        return out

    out = {}
    for (p, m), rcj in rc.items():
        diff = temps[m] - temps[p]
        den = np.zeros(zones.n_t)
        for j in range(n):
            den = den + diff[:, j] / rcj[j]
        num = n * (_zone_mean(temps[m]) - _zone_mean(temps[p]))
        out[f"tau_{p}{m}"] = ratio(num, den)

    q = {"ac": zones.q_ac, "int": zones.q_int}
    for m, arr in q.items():
        if arr is None:
            continue
        den = np.zeros(zones.n_t)
        for j in range(n):
            den = den + arr[:, j] / c_z[j]
        out[f"c_z_{m}"] = ratio(n * _zone_mean(arr), den)

    for p, area in (("z", model.param_array("a_z")), ("w", model.param_array("a_w"))):
        num = np.zeros(zones.n_t)
        for j in range(n):
            num = num + area[j] / res[p][j] * zones.eta_solar[:, j]
        out[f"a_{p}"] = ratio(num, n * _zone_mean(zones.eta_solar))
    return out
