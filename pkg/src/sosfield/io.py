"""Coefficient tables, process snapshots and CSV output."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .fitter import SinusoidSet
from .generator import CorrelatedProcess

FORMAT_VERSION = 1


class TableFormatError(ValueError):
    """A coefficient table is malformed; ``field`` names the offending entry."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


def table_dict(sinusoids: SinusoidSet) -> dict:
    ase = sinusoids.fit_ase_db
    return {
        "format_version": FORMAT_VERSION,
        "dims": sinusoids.dims,
        "n_sinusoids": sinusoids.n_sinusoids,
        "d_max_m": sinusoids.d_max,
        "decorr_distance_m": sinusoids.decorr_distance,
        "acf_name": sinusoids.acf_name,
        "fit_ase_db": None if math.isnan(ase) else ase,
        "freq_x": sinusoids.freq_x.tolist(),
        "freq_y": sinusoids.freq_y.tolist(),
        "freq_z": sinusoids.freq_z.tolist(),
    }


def _require(doc: dict, key: str, kind):
    if key not in doc:
        raise TableFormatError(key, "missing")
    value = doc[key]
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise TableFormatError(key, f"expected a number, got {value!r}")
        return float(value)
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise TableFormatError(key, f"expected an integer, got {value!r}")
        return value
    if kind is list:
        if not isinstance(value, list) or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in value):
            raise TableFormatError(key, "expected a list of numbers")
        return np.asarray(value, dtype=float)
    return value


def sinusoids_from_dict(doc: dict) -> SinusoidSet:
    if not isinstance(doc, dict):
        raise TableFormatError("<root>", "expected a JSON object")
    version = _require(doc, "format_version", int)
    if version != FORMAT_VERSION:
        raise TableFormatError("format_version", f"unsupported version {version}")
    dims = _require(doc, "dims", int)
    if dims not in (2, 3):
        raise TableFormatError("dims", f"must be 2 or 3, got {dims}")
    n = _require(doc, "n_sinusoids", int)
    cols = []
    for key in ("freq_x", "freq_y", "freq_z"):
        col = _require(doc, key, list)
        if col.size != n:
            raise TableFormatError(key, f"expected {n} values, got {col.size}")
        cols.append(col)
    if dims == 2 and np.any(cols[2] != 0):
        raise TableFormatError("freq_z", "must be all zero for a 2-D table")
    d_max = _require(doc, "d_max_m", float)
    decorr = _require(doc, "decorr_distance_m", float)
    if not decorr > 0:
        raise TableFormatError("decorr_distance_m", "must be positive")
    ase = doc.get("fit_ase_db")
    return SinusoidSet(
        np.column_stack(cols),
        d_max=d_max,
        decorr_distance=decorr,
        dims=dims,
        fit_ase_db=float("nan") if ase is None else float(ase),
        acf_name=str(doc.get("acf_name", "custom")),
    )


def _dump(doc: dict, path) -> None:
    Path(path).write_text(json.dumps(doc, indent=1) + "\n")


def _load(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise TableFormatError("<root>", f"invalid JSON ({exc})") from exc


def save_table(sinusoids: SinusoidSet, path) -> None:
    _dump(table_dict(sinusoids), path)


def load_table(path) -> SinusoidSet:
    return sinusoids_from_dict(_load(path))


def save_process(process: CorrelatedProcess, path) -> None:
    doc = table_dict(process.sinusoids)
    doc["phases"] = process.phases.tolist()
    _dump(doc, path)


def load_process(path) -> CorrelatedProcess:
    doc = _load(path)
    sinusoids = sinusoids_from_dict(doc)
    phases = _require(doc, "phases", list)
    if phases.size != sinusoids.n_sinusoids:
        raise TableFormatError("phases", f"expected {sinusoids.n_sinusoids} values, got {phases.size}")
    return CorrelatedProcess(sinusoids, phases)


def fmt(x) -> str:
    """Shortest round-trip text for a float; ``undefined`` for NaN."""
    x = float(x)
    if math.isnan(x):
        return "undefined"
    return repr(x)


def write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([v if isinstance(v, (str, int, np.integer)) else fmt(v) for v in row])
