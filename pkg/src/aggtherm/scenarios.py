"""Synthetic multi-zone datasets with full ground truth.

Two experiment styles are supported: an open-loop virtual building with
scheduled cooling, and a closed-loop analogue where every zone runs a
deadband thermostat that is shut off at night while space-heater style
internal loads switch on and off.
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass, field, replace

import numpy as np

from .aggregation import (
    AggregateData,
    AggregateParams,
    AggregationErrors,
    aggregate_params,
    aggregation_errors,
    average_signals,
)
from .thermal import DEFAULT_START, DEFAULT_TS, BuildingModel, ZoneParams, ZoneTraceSet, building_rhs

# Nominal zone whose aggregates sit at the magnitudes of the reference virtual building.
NOMINAL_ZONE = ZoneParams(r_za=1.105, c_z=0.715, r_zw=0.821, c_w=3.464, r_wa=5.595, a_z=0.4075, a_w=15.77)


def virtual_building(
    n_zones: int = 5,
    spread: float = 0.4,
    seed: int = 1,
    nominal: ZoneParams = NOMINAL_ZONE,
    interaction_resistance=None,
) -> BuildingModel:
    """Zones drawn from independent +/-``spread`` perturbations of ``nominal``."""
    rng = np.random.default_rng(seed)
    names = list(nominal.__dataclass_fields__)
    zones = []
    for _ in range(n_zones):
        f = 1.0 + spread * rng.uniform(-1.0, 1.0, size=len(names))
        zones.append(nominal.scaled(**dict(zip(names, f))))
    return BuildingModel(tuple(zones), interaction_resistance)


def homogeneous_building(n_zones: int = 5, zone: ZoneParams = NOMINAL_ZONE) -> BuildingModel:
    return BuildingModel(tuple([zone] * n_zones))


@dataclass(frozen=True)
class Weather:
    """Sinusoidal ambient temperature peaking at ``peak_hour``."""

    mean: float = 24.0
    amplitude: float = 5.0
    peak_hour: float = 15.0


@dataclass(frozen=True)
class Solar:
    """Half-sine irradiance between sunrise and sunset (kW/m2)."""

    peak: float = 0.8
    sunrise: float = 6.5
    sunset: float = 19.5
    zone_scale: tuple[float, ...] | None = None


@dataclass(frozen=True)
class Occupancy:
    """Daily piecewise-constant internal load.

    ``schedule`` lists (hour_of_day, kW) switch points; the level holds until
    the next switch and wraps around midnight.
    """

    schedule: tuple[tuple[float, float], ...] = (
        (0.0, 0.3),
        (8.0, 1.2),
        (12.0, 0.7),
        (13.0, 1.2),
        (17.0, 0.3),
    )
    zone_scale: tuple[float, ...] | None = None
    zone_offset: tuple[float, ...] | None = None


@dataclass(frozen=True)
class OpenLoopHVAC:
    """Scheduled cooling, same switch-point format as :class:`Occupancy`."""

    schedule: tuple[tuple[float, float], ...] = (
        (0.0, 0.0),
        (6.0, 1.0),
        (9.5, 2.2),
        (11.0, 1.4),
        (14.5, 2.6),
        (16.0, 1.8),
        (18.5, 0.6),
        (21.0, 0.0),
    )
    zone_scale: tuple[float, ...] | None = None
    day_scale: tuple[float, ...] = (1.0, 0.8, 1.15, 0.9)


@dataclass(frozen=True)
class DeadbandHVAC:
    """On/off cooling with hysteresis and a nightly shutoff window."""

    setpoint: float = 23.0
    deadband: float = 0.5
    capacity: float = 3.0
    shutoff: tuple[float, float] = (20.0, 6.0)

    def __post_init__(self):
        if not self.deadband > 0:
            raise ValueError("deadband width must be positive")
        if not self.capacity > 0:
            raise ValueError("cooling capacity must be positive")

    def is_shut_off(self, hour_of_day):
        start, end = self.shutoff
        h = np.mod(hour_of_day, 24.0)
        if start <= end:
            return (h >= start) & (h < end)
        return (h >= start) | (h < end)


@dataclass(frozen=True, eq=False)
class ScenarioSpec:
    building: BuildingModel
    days: float = 2.0
    t_s: float = DEFAULT_TS
    weather: Weather = field(default_factory=Weather)
    solar: Solar = field(default_factory=Solar)
    occupancy: Occupancy = field(default_factory=Occupancy)
    hvac: OpenLoopHVAC | DeadbandHVAC = field(default_factory=OpenLoopHVAC)
    asynchronicity: float = 1.0
    max_shift: float = 1.5
    max_scale: float = 0.35
    initial_temperature: float | None = None
    start_time: dt.datetime = DEFAULT_START
    seed: int = 0

    def __post_init__(self):
        if not self.days > 0:
            raise ValueError("horizon must be positive")
        if not self.t_s > 0:
            raise ValueError("t_s must be positive")
        if self.asynchronicity < 0:
            raise ValueError("asynchronicity must be non-negative")
        n = self.building.n_zones
        for name, obj in (("solar", self.solar), ("occupancy", self.occupancy), ("hvac", self.hvac)):
            for attr in ("zone_scale", "zone_offset"):
                v = getattr(obj, attr, None)
                if v is not None and len(v) != n:
                    raise ValueError(f"{name}.{attr} needs {n} entries")
        for name, obj in (("occupancy", self.occupancy), ("hvac", self.hvac)):
            sched = getattr(obj, "schedule", None)
            if sched is None:
                continue
            hours = [h for h, _ in sched]
            if not hours or any(not 0 <= h < 24 for h in hours) or hours != sorted(hours):
                raise ValueError(f"{name} schedule switch times must be sorted within [0, 24)")
            if any(v < 0 for _, v in sched):
                raise ValueError(f"{name} schedule levels must be non-negative")

    @property
    def n_t(self) -> int:
        return int(round(self.days * 24.0 / self.t_s))

    def with_(self, **changes) -> "ScenarioSpec":
        return replace(self, **changes)


@dataclass(frozen=True, eq=False)
class Scenario:
    """Generated traces plus everything needed to judge an estimate."""

    spec: ScenarioSpec
    zones: ZoneTraceSet
    aggregate: AggregateData
    truth: AggregateParams
    errors: AggregationErrors

    @property
    def q_bar_int(self) -> np.ndarray:
        return self.aggregate.q_bar_int

    @property
    def q_bar_agg(self) -> np.ndarray:
        return self.errors.q_bar_agg


def _daily_step(schedule, hours):
    sw = np.array([h for h, _ in schedule])
    lv = np.array([v for _, v in schedule])
    h = np.mod(hours, 24.0)
    # before the first switch of the day the last level of the previous day holds
    idx = np.searchsorted(sw, h, side="right") - 1
    return lv[idx]


def _zone_jitter(spec: ScenarioSpec):
    """Per-zone time shifts (h) and amplitude factors scaled by the asynchronicity dial."""
    rng = np.random.default_rng(spec.seed)
    n = spec.building.n_zones
    u = rng.uniform(-1.0, 1.0, size=(4, n))
    a = spec.asynchronicity
    shift_occ = a * spec.max_shift * u[0]
    shift_sol = a * 0.5 * spec.max_shift * u[1]
    scale_occ = 1.0 + a * spec.max_scale * u[2]
    scale_sol = 1.0 + a * spec.max_scale * u[3]
    return shift_occ, shift_sol, scale_occ, scale_sol


def _inputs(spec: ScenarioSpec):
    n = spec.building.n_zones
    hours = np.arange(spec.n_t) * spec.t_s
    hod = hours[:, None] + np.zeros((1, n))
    w = spec.weather
    t_a = w.mean + w.amplitude * np.cos(2 * np.pi * (hod - w.peak_hour) / 24.0)

    shift_occ, shift_sol, scale_occ, scale_sol = _zone_jitter(spec)

    s = spec.solar
    hs = np.mod(hod - shift_sol, 24.0)
    frac = (hs - s.sunrise) / (s.sunset - s.sunrise)
    eta = np.where((frac > 0) & (frac < 1), s.peak * np.sin(np.pi * np.clip(frac, 0, 1)), 0.0)
    eta = eta * scale_sol
    if s.zone_scale is not None:
        eta = eta * np.asarray(s.zone_scale)
    eta = np.maximum(eta, 0.0)

    o = spec.occupancy
    off = shift_occ + (np.asarray(o.zone_offset) if o.zone_offset is not None else 0.0)
    q_int = _daily_step(o.schedule, hod - off) * scale_occ
    if o.zone_scale is not None:
        q_int = q_int * np.asarray(o.zone_scale)
    q_int = np.maximum(q_int, 0.0)

    q_ac = None
    if isinstance(spec.hvac, OpenLoopHVAC):
        h = spec.hvac
        q_ac = _daily_step(h.schedule, hod)
        day = (hours // 24).astype(int)
        q_ac = q_ac * np.asarray(h.day_scale)[day % len(h.day_scale)][:, None]
        if h.zone_scale is not None:
            q_ac = q_ac * np.asarray(h.zone_scale)
    return hours, t_a, eta, q_int, q_ac


def deadband_controller(t_z, cooling_on, hvac: DeadbandHVAC, hour_of_day):
    """One control decision for each zone.

    Parameters
    ----------
    t_z : array_like
        Current zone temperatures.
    cooling_on : array_like of bool
        Controller state (cooler running) from the previous step.
    hvac : DeadbandHVAC
    hour_of_day : float

    Returns
    -------
    (q_ac, cooling_on)
        Cooling command in kW and the updated controller state.
    """
    t_z = np.asarray(t_z, dtype=float)
    on = np.array(cooling_on, dtype=bool, copy=True)
    on = np.where(t_z >= hvac.setpoint + hvac.deadband, True, on)
    on = np.where(t_z <= hvac.setpoint - hvac.deadband, False, on)
    if hvac.is_shut_off(hour_of_day):
        on = np.zeros_like(on)
    return np.where(on, hvac.capacity, 0.0), on


def _initial_states(spec: ScenarioSpec, t_a0: np.ndarray) -> np.ndarray:
    t0 = spec.initial_temperature
    if t0 is None:
        t0 = spec.hvac.setpoint if isinstance(spec.hvac, DeadbandHVAC) else float(np.mean(t_a0))
    n = spec.building.n_zones
    return np.column_stack([np.full(n, t0), np.full(n, t0)])


def generate(spec: ScenarioSpec) -> Scenario:
    """Simulate the scenario with forward Euler at ``spec.t_s``."""
    model = spec.building
    n, n_t, t_s = model.n_zones, spec.n_t, spec.t_s
    if n_t < 2:
        raise ValueError("horizon shorter than two samples")
    hours, t_a, eta, q_int, q_ac = _inputs(spec)
    closed_loop = q_ac is None
    if closed_loop:
        q_ac = np.zeros((n_t, n))
        cooling_on = np.zeros(n, dtype=bool)

    x0 = _initial_states(spec, t_a[0])
    tz = np.empty((n_t, n))
    tw = np.empty((n_t, n))
    tz[0], tw[0] = x0[:, 0], x0[:, 1]
    for k in range(n_t):
        if closed_loop:
            q_ac[k], cooling_on = deadband_controller(tz[k], cooling_on, spec.hvac, hours[k])
        if k == n_t - 1:
            break
        dtz, dtw = building_rhs(tz[k], tw[k], t_a[k], eta[k], q_ac[k], q_int[k], model)
        tz[k + 1] = tz[k] + t_s * dtz
        tw[k + 1] = tw[k] + t_s * dtw

    zones = ZoneTraceSet(
        t_s=t_s, t_z=tz, t_w=tw, t_a=t_a, eta_solar=eta, q_ac=q_ac, q_int=q_int, start_time=spec.start_time
    )
    truth = aggregate_params(model)
    return Scenario(
        spec=spec,
        zones=zones,
        aggregate=average_signals(zones),
        truth=truth,
        errors=aggregation_errors(model, zones, params=truth),
    )


def open_loop_spec(seed: int = 0, days: float = 2.0, asynchronicity: float = 1.0, **kw) -> ScenarioSpec:
    """Default heterogeneous 5-zone open-loop virtual building."""
    building = kw.pop("building", None) or virtual_building()
    return ScenarioSpec(building=building, days=days, asynchronicity=asynchronicity, seed=seed, **kw)


def closed_loop_spec(seed: int = 0, days: float = 12.0, asynchronicity: float = 1.0, **kw) -> ScenarioSpec:
    """Deadband-controlled analogue of the instrumented test building.

    Milder autumn weather, weaker solar and a larger cooler than the
    open-loop defaults, so the thermostat holds its band through the day.
    """
    building = kw.pop("building", None) or virtual_building()
    kw.setdefault("weather", Weather(mean=20.0, amplitude=5.0))
    kw.setdefault("solar", Solar(peak=0.3))
    kw.setdefault("hvac", DeadbandHVAC(capacity=6.0))
    return ScenarioSpec(building=building, days=days, asynchronicity=asynchronicity, seed=seed, **kw)
