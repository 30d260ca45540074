"""Zone-level 2R2C dynamics, multi-zone composition and forward-Euler simulation.

Units are hours, degC, kW and kWh throughout.
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

DEFAULT_TS = 1.0 / 12.0
DEFAULT_START = dt.datetime(2018, 9, 21)

INPUT_KINDS = ("t_a", "eta_solar", "q_ac", "q_int")
STATE_KINDS = ("t_z", "t_w")


def _check_finite(name, *values):
    for v in values:
        if not np.all(np.isfinite(v)):
            raise ValueError(f"{name}: non-finite value")


@dataclass(frozen=True)
class ZoneParams:
    """RC parameters of a single zone.

    Resistances in degC*h/kWh, capacitances in kWh/degC, solar apertures in m2.
    """

    r_za: float
    c_z: float
    r_zw: float
    c_w: float
    r_wa: float
    a_z: float = 0.0
    a_w: float = 0.0

    def __post_init__(self):
        for name in ("r_za", "c_z", "r_zw", "c_w", "r_wa", "a_z", "a_w"):
            v = float(getattr(self, name))
            if not np.isfinite(v):
                raise ValueError(f"ZoneParams.{name} must be finite, got {v}")
            object.__setattr__(self, name, v)
        for name in ("r_za", "c_z", "r_zw", "c_w", "r_wa"):
            if getattr(self, name) <= 0:
                raise ValueError(f"ZoneParams.{name} must be > 0")
        if self.a_z < 0 or self.a_w < 0:
            raise ValueError("solar apertures must be non-negative")

    def scaled(self, **factors: float) -> "ZoneParams":
        """Copy with selected fields multiplied by the given factors."""
        values = {k: getattr(self, k) * factors.get(k, 1.0) for k in self.__dataclass_fields__}
        return ZoneParams(**values)


@dataclass(frozen=True)
class ZoneState:
    t_z: float
    t_w: float

    def __post_init__(self):
        _check_finite("ZoneState", self.t_z, self.t_w)


@dataclass(frozen=True)
class ZoneInputs:
    t_a: float
    eta_solar: float = 0.0
    q_ac: float = 0.0
    q_int: float = 0.0

    def __post_init__(self):
        _check_finite("ZoneInputs", self.t_a, self.eta_solar, self.q_ac, self.q_int)
        if self.eta_solar < 0 or self.q_ac < 0 or self.q_int < 0:
            raise ValueError("eta_solar, q_ac and q_int must be non-negative")


def zone_derivative(state: ZoneState, inputs: ZoneInputs, params: ZoneParams) -> tuple[float, float]:
    """Right-hand side of the single-zone 2R2C model in degC/h."""
    p = params
    dtz = (
        (inputs.t_a - state.t_z) / (p.r_za * p.c_z)
        + (inputs.q_int - inputs.q_ac) / p.c_z
        + (state.t_w - state.t_z) / (p.r_zw * p.c_z)
        + p.a_z / p.c_z * inputs.eta_solar
    )
    dtw = (
        (state.t_z - state.t_w) / (p.r_zw * p.c_w)
        + (inputs.t_a - state.t_w) / (p.r_wa * p.c_w)
        + p.a_w / p.c_w * inputs.eta_solar
    )
    return dtz, dtw


@dataclass(frozen=True, eq=False)
class BuildingModel:
    """A set of 2R2C zones with optional symmetric zone-to-zone coupling.

    ``interaction_resistance`` is an N_z x N_z matrix of resistances between
    zone air nodes. ``np.inf`` (or ``None`` for the whole matrix) means no
    coupling; the diagonal is ignored.
    """

    zones: tuple[ZoneParams, ...]
    interaction_resistance: np.ndarray | None = None

    def __post_init__(self):
        zones = tuple(self.zones)
        if len(zones) < 1:
            raise ValueError("a building needs at least one zone")
        object.__setattr__(self, "zones", zones)
        r = self.interaction_resistance
        if r is None:
            return
        r = np.array(r, dtype=float)
        n = len(zones)
        if r.shape != (n, n):
            raise ValueError(f"interaction matrix must be {n}x{n}, got {r.shape}")
        off = ~np.eye(n, dtype=bool)
        r[~off] = np.inf
        if np.any(np.isnan(r)):
            raise ValueError("interaction matrix contains NaN")
        if not np.array_equal(r, r.T):
            raise ValueError("interaction matrix must be symmetric")
        if np.any(r[off] <= 0):
            raise ValueError("interaction resistances must be > 0 (use inf for no coupling)")
        r.setflags(write=False)
        object.__setattr__(self, "interaction_resistance", r)

    @property
    def n_zones(self) -> int:
        return len(self.zones)

    def param_array(self, name: str) -> np.ndarray:
        return np.array([getattr(z, name) for z in self.zones])

    @property
    def has_interactions(self) -> bool:
        r = self.interaction_resistance
        return r is not None and bool(np.any(np.isfinite(r)))


def interaction_terms(t_z: np.ndarray, model: BuildingModel) -> np.ndarray:
    """Coupling heat flows into each zone air node divided by its capacitance (degC/h)."""
    t_z = np.asarray(t_z, dtype=float)
    out = np.zeros_like(t_z)
    if not model.has_interactions:
        return out
    r = model.interaction_resistance
    c_z = model.param_array("c_z")
    n = model.n_zones
    for j in range(n):
        acc = np.zeros(t_z.shape[1:]) if t_z.ndim > 1 else 0.0
        for i in range(n):
            if i != j and np.isfinite(r[i, j]):
                acc = acc + (t_z[i] - t_z[j]) / (r[i, j] * c_z[j])
        out[j] = acc
    return out


def building_rhs(t_z, t_w, t_a, eta_solar, q_ac, q_int, model: BuildingModel):
    """Vectorised zone derivatives; arguments are arrays with zones on axis 0."""
    r_za, c_z, r_zw = (model.param_array(k) for k in ("r_za", "c_z", "r_zw"))
    c_w, r_wa, a_z, a_w = (model.param_array(k) for k in ("c_w", "r_wa", "a_z", "a_w"))
    if np.ndim(t_z) > 1:
        r_za, c_z, r_zw, c_w, r_wa, a_z, a_w = (
            v[:, None] for v in (r_za, c_z, r_zw, c_w, r_wa, a_z, a_w)
        )
    dtz = (
        (t_a - t_z) / (r_za * c_z)
        + (q_int - q_ac) / c_z
        + (t_w - t_z) / (r_zw * c_z)
        + a_z / c_z * eta_solar
    )
    dtw = (t_z - t_w) / (r_zw * c_w) + (t_a - t_w) / (r_wa * c_w) + a_w / c_w * eta_solar
    if model.has_interactions:
        dtz = dtz + interaction_terms(t_z, model)
    return dtz, dtw


def building_derivative(
    states: Sequence[ZoneState], inputs: Sequence[ZoneInputs], model: BuildingModel
) -> list[tuple[float, float]]:
    """Per-zone derivatives including the inter-zone coupling sum."""
    n = model.n_zones
    if len(states) != n or len(inputs) != n:
        raise ValueError(f"expected {n} states and inputs, got {len(states)} and {len(inputs)}")
    dtz, dtw = building_rhs(
        np.array([s.t_z for s in states]),
        np.array([s.t_w for s in states]),
        np.array([u.t_a for u in inputs]),
        np.array([u.eta_solar for u in inputs]),
        np.array([u.q_ac for u in inputs]),
        np.array([u.q_int for u in inputs]),
        model,
    )
    return [(float(a), float(b)) for a, b in zip(dtz, dtw)]


def step_forward_euler(
    states: Sequence[ZoneState], inputs: Sequence[ZoneInputs], model: BuildingModel, t_s: float
) -> list[ZoneState]:
    if not t_s > 0:
        raise ValueError("t_s must be positive")
    derivs = building_derivative(states, inputs, model)
    return [ZoneState(s.t_z + t_s * d[0], s.t_w + t_s * d[1]) for s, d in zip(states, derivs)]


@dataclass(frozen=True)
class SignalTrace:
    """A uniformly sampled scalar time series."""

    start_time: dt.datetime
    t_s: float
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim != 1 or v.size < 1:
            raise ValueError("SignalTrace needs a 1-d array with at least one sample")
        if not self.t_s > 0:
            raise ValueError("t_s must be positive")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __len__(self):
        return self.values.size

    @property
    def times(self) -> np.ndarray:
        """Sample times in hours since ``start_time``."""
        return np.arange(len(self)) * self.t_s


@dataclass(frozen=True, eq=False)
class ZoneTraceSet:
    """Per-zone signals on a common grid; each array has shape (N_t, N_z).

    ``t_w`` and ``q_int`` may be ``None`` for measured data.
    """

    t_s: float
    t_z: np.ndarray
    t_a: np.ndarray
    eta_solar: np.ndarray
    q_ac: np.ndarray
    t_w: np.ndarray | None = None
    q_int: np.ndarray | None = None
    start_time: dt.datetime = DEFAULT_START
    zone_ids: tuple[str, ...] = field(default=())

    def __post_init__(self):
        if not self.t_s > 0:
            raise ValueError("t_s must be positive")
        shape = None
        for name in ("t_z", "t_a", "eta_solar", "q_ac", "t_w", "q_int"):
            arr = getattr(self, name)
            if arr is None:
                continue
            arr = np.array(arr, dtype=float)
            if arr.ndim == 1:
                arr = arr[:, None]
            if arr.ndim != 2:
                raise ValueError(f"{name} must be 2-d (N_t, N_z)")
            if shape is None:
                shape = arr.shape
            elif arr.shape != shape:
                raise ValueError(f"{name} has shape {arr.shape}, expected {shape}")
            _check_finite(name, arr)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if shape[0] < 1 or shape[1] < 1:
            raise ValueError("empty trace set")
        ids = tuple(self.zone_ids) or tuple(f"z{j + 1}" for j in range(shape[1]))
        if len(ids) != shape[1]:
            raise ValueError("zone_ids length does not match number of zones")
        object.__setattr__(self, "zone_ids", ids)

    @property
    def n_t(self) -> int:
        return self.t_z.shape[0]

    @property
    def n_zones(self) -> int:
        return self.t_z.shape[1]

    def kinds(self) -> tuple[str, ...]:
        return tuple(k for k in ("t_z", "t_w", "t_a", "eta_solar", "q_ac", "q_int") if getattr(self, k) is not None)

    def trace(self, kind: str, zone: int) -> SignalTrace:
        return SignalTrace(self.start_time, self.t_s, getattr(self, kind)[:, zone])

    def slice(self, start: int, stop: int) -> "ZoneTraceSet":
        """Sub-window of samples ``[start, stop)``."""
        kw = {k: None if getattr(self, k) is None else getattr(self, k)[start:stop] for k in ("t_z", "t_a", "eta_solar", "q_ac", "t_w", "q_int")}
        t0 = self.start_time + dt.timedelta(hours=start * self.t_s)
        return ZoneTraceSet(t_s=self.t_s, start_time=t0, zone_ids=self.zone_ids, **kw)


def _as_initial(initial, n: int) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(initial, Iterable) and not isinstance(initial, np.ndarray):
        initial = list(initial)
        if initial and isinstance(initial[0], ZoneState):
            return np.array([s.t_z for s in initial]), np.array([s.t_w for s in initial])
    arr = np.asarray(initial, dtype=float)
    if arr.shape != (n, 2):
        raise ValueError(f"initial states must have shape ({n}, 2)")
    return arr[:, 0].copy(), arr[:, 1].copy()


def simulate(
    model: BuildingModel,
    inputs: ZoneTraceSet,
    initial,
    t_s: float | None = None,
    n_t: int | None = None,
) -> ZoneTraceSet:
    """Open-loop forward-Euler simulation.

    Parameters
    ----------
    model : BuildingModel
    inputs : ZoneTraceSet
        Provides ``t_a``, ``eta_solar``, ``q_ac`` and ``q_int`` per zone; any
        state arrays it carries are ignored. ``q_int`` missing means zero.
    initial : sequence of ZoneState or array (N_z, 2)
    t_s : float, optional
        Must equal ``inputs.t_s`` if given.
    n_t : int, optional
        Number of output samples; defaults to the input length.

    Returns
    -------
    ZoneTraceSet
        States for samples 0..n_t-1 plus the echoed inputs.
    """
    if t_s is not None and not np.isclose(t_s, inputs.t_s, rtol=0, atol=1e-12):
        raise ValueError(f"sampling interval mismatch: {t_s} vs traces {inputs.t_s}")
    t_s = inputs.t_s
    n_t = inputs.n_t if n_t is None else int(n_t)
    if n_t < 1 or n_t > inputs.n_t:
        raise ValueError(f"n_t={n_t} outside 1..{inputs.n_t}")
    n = model.n_zones
    if inputs.n_zones != n:
        raise ValueError(f"inputs carry {inputs.n_zones} zones, model has {n}")
    q_int = inputs.q_int if inputs.q_int is not None else np.zeros_like(inputs.q_ac)
    tz = np.empty((n_t, n))
    tw = np.empty((n_t, n))
    tz[0], tw[0] = _as_initial(initial, n)
    for k in range(n_t - 1):
        dtz, dtw = building_rhs(tz[k], tw[k], inputs.t_a[k], inputs.eta_solar[k], inputs.q_ac[k], q_int[k], model)
        tz[k + 1] = tz[k] + t_s * dtz
        tw[k + 1] = tw[k] + t_s * dtw
    return ZoneTraceSet(
        t_s=t_s,
        t_z=tz,
        t_w=tw,
        t_a=inputs.t_a[:n_t],
        eta_solar=inputs.eta_solar[:n_t],
        q_ac=inputs.q_ac[:n_t],
        q_int=q_int[:n_t],
        start_time=inputs.start_time,
        zone_ids=inputs.zone_ids,
    )
