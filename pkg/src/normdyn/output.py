"""CSV and JSON emission.

Every CSV starts with ``# key = value`` comment lines (resolved config, seed
list), followed by a header row and data rows. Nothing time-dependent is
written, so reruns with the same inputs give byte-identical files.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

TRACE_COLUMNS = [
    "iteration", "count_human", "count_nasheq", "count_selfish", "count_util",
    "count_hconscious", "fit_human", "fit_nasheq", "fit_selfish", "fit_util",
    "fit_hconscious", "fit_total", "gini",
]
GRADIENT_COLUMNS = ["k", "frac_ai", "f_h", "f_ai", "t_plus", "t_minus", "g"]
PAROCHIAL_COLUMNS = ["b", "c", "gain_p1", "gain_p2", "difference"]


def fmt(x) -> str:
    """9 significant digits; integers verbatim; None/nan as an empty field."""
    if x is None:
        return ""
    if isinstance(x, str):
        return x
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return ""
    return f"{x:.9g}"


def write_csv(path, columns, rows, header=()) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        for line in header:
            fh.write(f"# {line}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            if len(row) != len(columns):
                raise ValueError(f"row has {len(row)} fields, expected {len(columns)}")
            w.writerow([fmt(v) for v in row])
    return path


def read_csv(path) -> tuple[list[str], list[str], list[dict]]:
    """``(header lines, columns, rows)``; values stay as strings."""
    header, body = [], []
    with open(path, newline="") as fh:
        for line in fh:
            if line.startswith("# ") and not body:
                header.append(line[2:].rstrip("\n"))
            else:
                body.append(line)
    reader = csv.reader(body)
    columns = next(reader)
    return header, columns, [dict(zip(columns, r)) for r in reader]


def header_dict(header: list[str]) -> dict:
    out = {}
    for line in header:
        key, sep, value = line.partition(" = ")
        if sep:
            out[key] = value
    return out


def trace_rows(trace):
    for r in range(len(trace)):
        yield ([trace.iterations[r], *trace.counts[r], *trace.fitness[r],
                trace.fit_total[r], trace.gini[r]])


def emit_trace(trace, path, header=()) -> Path:
    return write_csv(path, TRACE_COLUMNS, trace_rows(trace), header)


def emit_gradient(estimates, path, header=()) -> Path:
    rows = ([e.k, e.frac_ai, e.f_h_mean, e.f_ai_mean, e.t_plus, e.t_minus, e.g]
            for e in estimates)
    return write_csv(path, GRADIENT_COLUMNS, rows, header)


def emit_parochial(rows, path, header=()) -> Path:
    return write_csv(path, PAROCHIAL_COLUMNS,
                     ([r.b, r.c, r.gain_p1, r.gain_p2, r.difference] for r in rows), header)


def _num(s: str) -> float:
    return float(s) if s != "" else math.nan


def read_trace(path) -> dict:
    """Columns of a trace CSV as arrays; counts come back as integers."""
    _, columns, rows = read_csv(path)
    if columns != TRACE_COLUMNS:
        raise ValueError(f"{path} is not a trace file")
    out = {}
    for c in columns:
        if c == "iteration" or c.startswith("count_"):
            vals = [float(r[c]) for r in rows]
            if all(v.is_integer() for v in vals):
                out[c] = np.array(vals, dtype=np.int64)
            else:
                out[c] = np.array(vals)
        else:
            out[c] = np.array([_num(r[c]) for r in rows])
    return out


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return None
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return float(f"{x:.9g}")
    return x


def write_json(path, data) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_jsonable(data), indent=2, sort_keys=True) + "\n")
    return path
