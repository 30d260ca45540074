"""CSV ingestion and export.

Floats are written with ``repr`` so every exported value reads back
bit-identically. Files are UTF-8 without a byte-order mark and use ``\\n``
line endings.
"""

from __future__ import annotations

import csv
import datetime as dt
from pathlib import Path

import numpy as np

from .aggregation import PARAM_UNITS, AggregateParams
from .thermal import ZoneTraceSet

ZONE_COLUMNS = ("timestamp", "zone_id", "T_z", "T_a", "eta_solar", "q_ac", "q_int")
_OPTIONAL = {"q_int"}
# CSV column -> ZoneTraceSet attribute
_ZONE_FIELDS = {"T_z": "t_z", "T_a": "t_a", "eta_solar": "eta_solar", "q_ac": "q_ac", "q_int": "q_int"}
RESULT_COLUMNS = ("timestamp", "T_bar_z", "T_bar_w_hat", "q_agg_hat", "nu")
PARAM_COLUMNS = ("parameter", "estimate", "true_value", "unit")


class DataError(ValueError):
    """Malformed or inconsistent input file."""


def _fmt(x) -> str:
    return repr(float(x))


def _timestamps(start: dt.datetime, t_s: float, n: int) -> list[str]:
    step = dt.timedelta(hours=t_s)
    return [(start + k * step).isoformat() for k in range(n)]


def _open_write(path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    return open(path, "w", encoding="utf-8", newline="")


def _writer(fh):
    return csv.writer(fh, lineterminator="\n")


def export_zone_csv(zones: ZoneTraceSet, path) -> None:
    """Write zone traces in long format, one row per (timestamp, zone)."""
    cols = [c for c in ZONE_COLUMNS if c not in _OPTIONAL or getattr(zones, _ZONE_FIELDS[c]) is not None]
    stamps = _timestamps(zones.start_time, zones.t_s, zones.n_t)
    arrays = [getattr(zones, _ZONE_FIELDS[c]) for c in cols[2:]]
    with _open_write(path) as fh:
        w = _writer(fh)
        w.writerow(cols)
        for k, ts in enumerate(stamps):
            for j, zid in enumerate(zones.zone_ids):
                w.writerow([ts, zid] + [_fmt(a[k, j]) for a in arrays])


def _parse_time(text: str, row: int) -> dt.datetime:
    try:
        return dt.datetime.fromisoformat(text)
    except ValueError:
        raise DataError(f"row {row}, column 'timestamp': not an ISO-8601 time: {text!r}") from None


def ingest_zone_csv(path) -> ZoneTraceSet:
    """Read and validate a long-format zone file.

    The zone set is fixed by the first timestamp; every later timestamp must
    carry exactly those zones. Rows are numbered from 1 at the header.
    """
    path = Path(path)
    try:
        fh = open(path, encoding="utf-8", newline="")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from None
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise DataError(f"{path}: empty file")
        if header and header[0].startswith("﻿"):
            raise DataError(f"{path}: byte-order mark not allowed")
        header = [h.strip() for h in header]
        missing = [c for c in ZONE_COLUMNS if c not in _OPTIONAL and c not in header]
        if missing:
            raise DataError(f"{path}: missing column(s) {', '.join(missing)}")
        unknown = [c for c in header if c not in ZONE_COLUMNS]
        if unknown:
            raise DataError(f"{path}: unexpected column(s) {', '.join(unknown)}")
        pos = {c: header.index(c) for c in header}
        value_cols = [c for c in ZONE_COLUMNS[2:] if c in pos]

        times: list[dt.datetime] = []
        zone_ids: list[str] = []
        rows: list[list[float]] = []
        current = None
        seen: list[str] = []
        for row_no, rec in enumerate(reader, start=2):
            if not rec:
                continue
            if len(rec) != len(header):
                raise DataError(f"row {row_no}: expected {len(header)} fields, got {len(rec)}")
            ts = rec[pos["timestamp"]].strip()
            zid = rec[pos["zone_id"]].strip()
            if not zid:
                raise DataError(f"row {row_no}, column 'zone_id': blank")
            vals = []
            for c in value_cols:
                cell = rec[pos[c]].strip()
                try:
                    v = float(cell)
                except ValueError:
                    v = float("nan")
                if not np.isfinite(v):
                    raise DataError(f"row {row_no}, column '{c}': missing or non-numeric value {cell!r}")
                vals.append(v)
            if ts != current:
                if current is not None and len(seen) != len(zone_ids):
                    absent = [z for z in zone_ids if z not in seen]
                    raise DataError(f"row {row_no}: timestamp {current} lacks zone(s) {', '.join(absent)}")
                times.append(_parse_time(ts, row_no))
                current, seen = ts, []
            if len(times) == 1:
                if zid in zone_ids:
                    raise DataError(f"row {row_no}, column 'zone_id': duplicate zone {zid!r}")
                zone_ids.append(zid)
            elif zid not in zone_ids:
                raise DataError(f"row {row_no}, column 'zone_id': unknown zone id {zid!r}")
            elif zid in seen:
                raise DataError(f"row {row_no}, column 'zone_id': duplicate zone {zid!r} at {ts}")
            elif zid != zone_ids[len(seen)]:
                raise DataError(f"row {row_no}, column 'zone_id': expected zone {zone_ids[len(seen)]!r}, got {zid!r}")
            seen.append(zid)
            rows.append(vals)
        if current is None:
            raise DataError(f"{path}: no data rows")
        if len(seen) != len(zone_ids):
            absent = [z for z in zone_ids if z not in seen]
            raise DataError(f"{path}: last timestamp lacks zone(s) {', '.join(absent)}")

    if len(times) < 2:
        raise DataError(f"{path}: need at least two timestamps")
    steps = {(b - a) for a, b in zip(times, times[1:])}
    if len(steps) != 1:
        for i, (a, b) in enumerate(zip(times, times[1:])):
            if b - a != times[1] - times[0]:
                raise DataError(f"timestamp {b.isoformat()}: step differs from the first step (non-uniform grid)")
    step = steps.pop()
    if step <= dt.timedelta(0):
        raise DataError(f"{path}: timestamps must be strictly increasing")

    n_t, n_z = len(times), len(zone_ids)
    data = np.asarray(rows, dtype=float).reshape(n_t, n_z, len(value_cols))
    kw = {_ZONE_FIELDS[c]: data[:, :, i] for i, c in enumerate(value_cols)}
    return ZoneTraceSet(
        t_s=step.total_seconds() / 3600.0, start_time=times[0], zone_ids=tuple(zone_ids), **kw
    )


def write_series_csv(path, start: dt.datetime, t_s: float, columns: dict) -> None:
    """Write named 1-d series against a timestamp column (plot-ready output)."""
    names = list(columns)
    arrays = [np.asarray(columns[c], dtype=float) for c in names]
    n = arrays[0].size if arrays else 0
    if any(a.size != n for a in arrays):
        raise ValueError("series lengths differ")
    with _open_write(path) as fh:
        w = _writer(fh)
        w.writerow(["timestamp"] + names)
        for k, ts in enumerate(_timestamps(start, t_s, n)):
            w.writerow([ts] + [_fmt(a[k]) for a in arrays])


def read_series_csv(path) -> tuple[list[str], dict]:
    """Read a file written by :func:`write_series_csv`; returns timestamps and columns."""
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            body = [r for r in reader if r]
    except (OSError, StopIteration) as exc:
        raise DataError(f"cannot read {path}: {exc}") from None
    if not header or header[0] != "timestamp":
        raise DataError(f"{path}: first column must be 'timestamp'")
    stamps = [r[0] for r in body]
    cols = {}
    for i, name in enumerate(header[1:], start=1):
        try:
            cols[name] = np.array([float(r[i]) for r in body])
        except (ValueError, IndexError):
            raise DataError(f"{path}: bad value in column {name!r}") from None
    return stamps, cols


def write_results_csv(path, start, t_s, t_bar_z, t_bar_w_hat, q_agg_hat, nu) -> None:
    write_series_csv(
        path,
        start,
        t_s,
        dict(zip(RESULT_COLUMNS[1:], (t_bar_z, t_bar_w_hat, q_agg_hat, nu))),
    )


def write_params_csv(path, estimate: AggregateParams, truth: AggregateParams | None = None) -> None:
    """Parameter table with estimate, true value (blank if unknown) and unit."""
    with _open_write(path) as fh:
        w = _writer(fh)
        w.writerow(PARAM_COLUMNS)
        for name in AggregateParams.names():
            true = "" if truth is None else _fmt(getattr(truth, name))
            w.writerow([name, _fmt(getattr(estimate, name)), true, PARAM_UNITS[name]])


def read_params_csv(path) -> AggregateParams:
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from None
    if not rows or rows[0][:2] != list(PARAM_COLUMNS[:2]):
        raise DataError(f"{path}: not a parameter table")
    vals = {}
    for i, r in enumerate(rows[1:], start=2):
        if not r:
            continue
        try:
            vals[r[0]] = float(r[1])
        except (ValueError, IndexError):
            raise DataError(f"{path}: row {i}: bad estimate") from None
    try:
        return AggregateParams(**{n: vals[n] for n in AggregateParams.names()})
    except KeyError as exc:
        raise DataError(f"{path}: missing parameter {exc.args[0]}") from None
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from None


def write_text(path, lines) -> None:
    with _open_write(path) as fh:
        for line in lines:
            fh.write(line + "\n")
