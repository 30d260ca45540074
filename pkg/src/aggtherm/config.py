"""Flat ``section.key=value`` run configuration.

Lines starting with ``#`` and blank lines are ignored. Every key has a
default, so an empty file is a valid configuration; unknown keys are
rejected so that typos do not pass silently.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .aggregation import AggregateParams
from .estimation.identify import DEFAULT_THETA_PRIOR, IdentConfig
from .io import DataError
from .scenarios import (
    ScenarioSpec,
    closed_loop_spec,
    homogeneous_building,
    open_loop_spec,
    virtual_building,
)
from .thermal import DEFAULT_TS


class ConfigError(ValueError):
    pass


_THETA_KEYS = {f"ident.theta_prior.{n}": v for n, v in zip(AggregateParams.names(), DEFAULT_THETA_PRIOR)}

DEFAULTS: dict[str, str] = {
    "data.zones": "",
    "output.dir": "aggtherm-out",
    "scenario.kind": "open_loop",
    "scenario.days": "",
    "scenario.t_s": repr(DEFAULT_TS),
    "scenario.asynchronicity": "1.0",
    "scenario.seed": "0",
    "scenario.n_zones": "5",
    "scenario.spread": "0.4",
    "scenario.building_seed": "1",
    "scenario.homogeneous": "false",
    "ident.lambda": "10.0",
    "ident.r": "0.01",
    "ident.alpha": "0.001",
    **{k: repr(v) for k, v in _THETA_KEYS.items()},
    "ident.p_theta_inv": "0.1",
    "ident.x0_prior": "",
    "ident.p_x0_inv": "1.0,0.01,0.01",
    "ident.theta_lower": "0.001",
    "ident.theta_upper": "1000.0",
    "ident.q_lower": "0.0",
    "ident.q_upper": "inf",
    "ident.q_scale": "1.0",
    "ident.kkt_tol": "1e-06",
    "ident.constraint_tol": "1e-08",
    "ident.max_outer": "50",
    "ident.max_inner": "500",
    "ident.mu0": "1000.0",
    "ident.init": "consistent",
    "ident.multistart": "0",
    "ident.seed": "0",
    "split.train_days": "",
    "predict.params": "",
    "predict.disturbance": "q_int,q_agg",
    "report.window_hours": "1.0",
}

DISTURBANCES = ("q_int", "q_agg")


def parse_config_text(text: str, source: str = "<config>") -> dict[str, str]:
    values = {}
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{no}: expected key=value")
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in DEFAULTS:
            raise ConfigError(f"{source}:{no}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"{source}:{no}: duplicate key {key!r}")
        values[key] = val
    return values


def read_config(path) -> dict[str, str]:
    """Effective key/value map: file values over defaults."""
    values = dict(DEFAULTS)
    if path is not None:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        values.update(parse_config_text(text, str(path)))
    return values


def format_config(values: dict[str, str]) -> list[str]:
    return [f"{k}={values[k]}" for k in sorted(values)]


def _float(values, key):
    try:
        return float(values[key])
    except ValueError:
        raise ConfigError(f"{key}: not a number: {values[key]!r}") from None


def _int(values, key):
    try:
        return int(values[key])
    except ValueError:
        raise ConfigError(f"{key}: not an integer: {values[key]!r}") from None


def _bool(values, key):
    v = values[key].lower()
    if v in ("true", "1", "yes"):
        return True
    if v in ("false", "0", "no"):
        return False
    raise ConfigError(f"{key}: not a boolean: {values[key]!r}")


def _floats(values, key):
    text = values[key]
    if not text:
        return None
    try:
        return [float(s) for s in text.split(",")]
    except ValueError:
        raise ConfigError(f"{key}: expected comma-separated numbers") from None


def _optional_float(values, key):
    return None if values[key] == "" else _float(values, key)


@dataclass(frozen=True, eq=False)
class RunConfig:
    values: dict
    zones_path: Path | None
    out_dir: Path
    scenario: ScenarioSpec | None
    ident: IdentConfig
    train_days: float | None
    params_path: Path | None
    disturbances: tuple
    window_hours: float


def _ident_config(values) -> IdentConfig:
    p_x0 = _floats(values, "ident.p_x0_inv")
    if p_x0 is None or len(p_x0) != 3:
        raise ConfigError("ident.p_x0_inv: expected 3 diagonal weights")
    x0 = _floats(values, "ident.x0_prior")
    if x0 is not None and len(x0) != 3:
        raise ConfigError("ident.x0_prior: expected 3 values")
    try:
        return IdentConfig(
            theta_prior=tuple(_float(values, k) for k in _THETA_KEYS),
            p_theta_inv=_float(values, "ident.p_theta_inv") * np.eye(7),
            x0_prior=x0,
            p_x0_inv=np.diag(p_x0),
            lam=_float(values, "ident.lambda"),
            r=_float(values, "ident.r"),
            alpha=_float(values, "ident.alpha"),
            theta_lower=_float(values, "ident.theta_lower"),
            theta_upper=_float(values, "ident.theta_upper"),
            q_lower=_float(values, "ident.q_lower"),
            q_upper=_float(values, "ident.q_upper"),
            q_scale=_float(values, "ident.q_scale"),
            kkt_tol=_float(values, "ident.kkt_tol"),
            constraint_tol=_float(values, "ident.constraint_tol"),
            max_outer=_int(values, "ident.max_outer"),
            max_inner=_int(values, "ident.max_inner"),
            mu0=_float(values, "ident.mu0"),
            init=values["ident.init"],
            multistart=_int(values, "ident.multistart"),
            seed=_int(values, "ident.seed"),
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"ident: {exc}") from None


def _scenario(values) -> ScenarioSpec:
    kind = values["scenario.kind"]
    if kind not in ("open_loop", "closed_loop"):
        raise ConfigError("scenario.kind must be open_loop or closed_loop")
    n = _int(values, "scenario.n_zones")
    try:
        if _bool(values, "scenario.homogeneous"):
            building = homogeneous_building(n_zones=n)
        else:
            building = virtual_building(
                n_zones=n, spread=_float(values, "scenario.spread"), seed=_int(values, "scenario.building_seed")
            )
        kw = dict(
            seed=_int(values, "scenario.seed"),
            asynchronicity=_float(values, "scenario.asynchronicity"),
            building=building,
            t_s=_float(values, "scenario.t_s"),
        )
        days = _optional_float(values, "scenario.days")
        if days is not None:
            kw["days"] = days
        return (open_loop_spec if kind == "open_loop" else closed_loop_spec)(**kw)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"scenario: {exc}") from None


def build_run_config(values: dict[str, str], out_dir=None, seed=None) -> RunConfig:
    """Validate a key/value map; ``out_dir`` and ``seed`` override the file."""
    values = dict(values)
    if out_dir is not None:
        values["output.dir"] = str(out_dir)
    if seed is not None:
        values["scenario.seed"] = str(int(seed))
    zones_path = Path(values["data.zones"]) if values["data.zones"] else None
    if zones_path is not None and not zones_path.is_file():
        raise DataError(f"data.zones: no such file {zones_path}")
    params_path = Path(values["predict.params"]) if values["predict.params"] else None
    if params_path is not None and not params_path.is_file():
        raise DataError(f"predict.params: no such file {params_path}")
    dist = tuple(s.strip() for s in values["predict.disturbance"].split(",") if s.strip())
    bad = [d for d in dist if d not in DISTURBANCES]
    if bad or not dist:
        raise ConfigError(f"predict.disturbance: choose from {', '.join(DISTURBANCES)}")
    train = _optional_float(values, "split.train_days")
    if train is not None and not train > 0:
        raise ConfigError("split.train_days must be positive")
    window = _float(values, "report.window_hours")
    if not window > 0:
        raise ConfigError("report.window_hours must be positive")
    return RunConfig(
        values=values,
        zones_path=zones_path,
        out_dir=Path(values["output.dir"]),
        scenario=None if zones_path is not None else _scenario(values),
        ident=_ident_config(values),
        train_days=train,
        params_path=params_path,
        disturbances=dist,
        window_hours=window,
    )
