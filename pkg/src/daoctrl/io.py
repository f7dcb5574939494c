"""Trace CSV, summary JSON and plot-data writers.

Trace CSV columns, one row per step per agent (agent numbers 1-based)::

    t,i,x,u,d,gamma,r,r_defined,subgraph_epoch

Floats are written with ``repr`` so they round-trip exactly.
"""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from .engine import EvalReport, SimTrace

TRACE_FIELDS = ("t", "i", "x", "u", "d", "gamma", "r", "r_defined", "subgraph_epoch")


def _num(v: float) -> str:
    return repr(float(v))


def jsonable(obj: Any) -> Any:
    """Replace non-finite floats with None and numpy scalars with Python ones."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def dump_json(obj: Any, path: Path) -> None:
    path.write_text(json.dumps(jsonable(obj), indent=2, allow_nan=False) + "\n")


def write_trace_csv(trace: SimTrace, path: Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_FIELDS)
        for k in range(trace.steps_recorded):
            t = _num(trace.t[k])
            epoch = int(trace.subgraph_epoch[k])
            for i in range(trace.n):
                w.writerow((t, i + 1, _num(trace.x[k, i]), _num(trace.u[k, i]), _num(trace.d[k, i]),
                            _num(trace.gamma[k, i]), _num(trace.r[k, i]), int(trace.r_defined[k, i]), epoch))


def read_trace_csv(path: Path) -> dict[str, np.ndarray]:
    """Load a trace CSV back into (steps, n) arrays keyed by column name."""
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    n = max(int(r["i"]) for r in rows)
    steps = len(rows) // n
    out = {}
    for name in ("x", "u", "d", "gamma", "r"):
        out[name] = np.array([float(r[name]) for r in rows]).reshape(steps, n)
    out["r_defined"] = np.array([r["r_defined"] == "1" for r in rows]).reshape(steps, n)
    out["t"] = np.array([float(rows[k * n]["t"]) for k in range(steps)])
    out["subgraph_epoch"] = np.array([int(rows[k * n]["subgraph_epoch"]) for k in range(steps)])
    return out


def run_summary(trace: SimTrace, report: EvalReport) -> dict:
    return {
        "regime": trace.regime.value,
        "seed": trace.seed,
        "steps": trace.steps_recorded,
        "base_dt": trace.base_dt,
        "report": report.summary(),
        "initial_x": trace.initial_x,
        "initial_u": trace.initial_u,
        "subgraphs": trace.subgraphs,
        "events": trace.events,
        "diagnostics": trace.diagnostics,
    }


def write_plot_csv(path: Path, t: np.ndarray, columns: dict[str, np.ndarray],
                   extra: Sequence[tuple[str, Any]] = ()) -> None:
    """Curves sharing a time axis; NaN samples are written as empty cells."""
    names = list(columns)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", *[k for k, _ in extra], *names])
        for k in range(len(t)):
            vals = [columns[c][k] for c in names]
            w.writerow([_num(t[k]), *[v for _, v in extra],
                        *["" if not math.isfinite(v) else _num(v) for v in vals]])


def append_rows(path: Path, header: Iterable[str], rows: Iterable[Iterable[Any]]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(header))
        for row in rows:
            w.writerow(["" if isinstance(v, float) and not math.isfinite(v) else
                        (_num(v) if isinstance(v, float) else v) for v in row])
