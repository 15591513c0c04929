"""JSON reports and plot-ready CSV output for the command-line front end."""

from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from pathlib import Path

import numpy as np

SCHEMA_VERSION = "1"


def load_schema() -> dict:
    return json.loads(resources.files("ndcrisk").joinpath("report_schema.json").read_text())


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def to_jsonable(obj):
    """Plain-JSON view of results: numpy scalars unwrapped, non-finite floats to ``None``."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


@dataclass
class Report:
    verb: str
    options: dict
    results: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)
    inputs: dict = field(default_factory=dict)
    seed: int | None = None
    error: str | None = None
    # plot-ready series, {name: (header, index, *columns)}; not part of the JSON
    plots: dict = field(default_factory=dict)
    path_dump: np.ndarray | None = None

    def to_dict(self) -> dict:
        return to_jsonable({
            "schema_version": SCHEMA_VERSION,
            "command": {"verb": self.verb, "options": self.options},
            "results": self.results,
            "warnings": list(dict.fromkeys(self.warnings)),
            "provenance": {"inputs": self.inputs, "seed": self.seed},
            "error": self.error,
        })

    def to_json(self) -> str:
        # json emits the shortest repr that round-trips each float
        return json.dumps(self.to_dict(), indent=2, allow_nan=False) + "\n"


def write_series_csv(path, header: list[str], index, *columns) -> Path:
    """One CSV with ``header``; the first column is ``index``."""
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in zip(index, *columns):
            w.writerow([_cell(v) for v in row])
    return path


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return int(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    return repr(float(v))


def emit_plot_data(series: dict, target_dir) -> list[Path]:
    """Write ``{name: (header, index, *columns)}`` as ``<target_dir>/<name>.csv`` files."""
    target = Path(target_dir)
    target.mkdir(parents=True, exist_ok=True)
    written = []
    for name in sorted(series):
        header, index, *columns = series[name]
        written.append(write_series_csv(target / f"{name}.csv", header, index, *columns))
    return written
