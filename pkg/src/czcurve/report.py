"""Report emission: CSV tables, sorted-key JSON and two-column plot data.

Every file starts with (or, for JSON, contains) the run seed. Column
headers name the quantity each column holds. Output is byte-identical
for identical inputs.
"""

from __future__ import annotations

import json
import math
import os

import numpy as np

from .sio import rows_to_csv

GOODLAMBDA_HEADER = ["f", "ε", "λ", "δ", "ν(Ω_λ)", "ν{T_*f>(1+ε)λ, M_νf≤δλ}", "(1-θ/4)ν(Ω_λ)", "pass"]
CONSTANT_HEADER = ["symbol", "value", "provenance"]
LP_HEADER = ["p", "f", "ε", "δ", "η", "‖T_*f‖_p", "‖M_νf‖_p", "‖f‖_p", "bound ‖T_*f‖_p", "A_p", "feasible"]
LOCAL_HEADER = ["route", "f", "x", "piece", "k", "λ", "ε", "δ", "T_*(χ_{2B₂}f)(x)", "ελ/2", "pass", "witness z"]
SYMBOLS = {"theta": "θ", "C_K": "C_K", "C_nu": "C_ν", "c": "c", "C_D": "C_D", "C_pointwise": "C",
           "C_pointwise_rigorous": "C (corrected chain)"}


def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_clean(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    return obj


def dumps_json(obj) -> str:
    return json.dumps(_clean(obj), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def _write(path, text: str) -> str:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    return str(path)


def write_json(path, obj) -> str:
    return _write(path, dumps_json(obj))


def write_csv(path, header, rows, seed) -> str:
    return _write(path, rows_to_csv(header, rows, seed))


def dat_text(x, y, xlabel: str, ylabel: str, seed) -> str:
    lines = [f"# seed={int(seed)}", f"# {xlabel}\t{ylabel}"]
    lines += [f"{float(a)!r}\t{float(b)!r}" for a, b in zip(x, y)]
    return "\n".join(lines) + "\n"


def write_dat(path, x, y, xlabel: str, ylabel: str, seed) -> str:
    return _write(path, dat_text(x, y, xlabel, ylabel, seed))


def goodlambda_rows(rows) -> list:
    """Table rows sorted by (f, eps, ascending lambda)."""
    rows = sorted(rows, key=lambda r: (r["f"], -r["eps"], r["lam"]))
    return [(int(r["f"]), float(r["eps"]), float(r["lam"]), float(r["delta"]), float(r["mass_omega"]),
             float(r["mass_bad"]), float(r["bound"]), int(bool(r["passed"]))) for r in rows]


def emit_report(report: dict, outdir, seed: int | None = None, formats=("csv", "json", "dat")) -> list:
    """Write a pipeline report into ``outdir``; returns the written paths in order."""
    seed = int(report.get("config", {}).get("seed", 0) if seed is None else seed)
    os.makedirs(outdir, exist_ok=True)
    out = []
    if "json" in formats:
        out.append(write_json(os.path.join(outdir, "report.json"), {"seed": seed, **report}))
    gl = report.get("goodlambda", {}).get("rows", [])
    table = goodlambda_rows(gl)
    if "csv" in formats:
        out.append(write_csv(os.path.join(outdir, "goodlambda.csv"), GOODLAMBDA_HEADER, table, seed))
        consts = [(SYMBOLS.get(k, k), float(v["value"]), v["provenance"])
                  for k, v in sorted(report.get("constants", {}).items())]
        out.append(write_csv(os.path.join(outdir, "constants.csv"), CONSTANT_HEADER, consts, seed))
        lp_rows = []
        for p, block in sorted(report.get("lp", {}).items(), key=lambda kv: float(kv[0])):
            for j, r in enumerate(block["per_f"]):
                lp_rows.append((float(p), j, _num(r["eps"]), _num(r["delta"]), float(r["eta"]), float(r["norm_T"]),
                                float(r["norm_M"]), float(r["norm_f"]), float(r["bound_T"]), float(r["A_p"]),
                                int(bool(r["feasible"]))))
        out.append(write_csv(os.path.join(outdir, "lp.csv"), LP_HEADER, lp_rows, seed))
        loc_rows = []
        for route, block in sorted(report.get("localization", {}).items()):
            for r in block["reports"]:
                loc_rows.append((route, int(r["f"]), int(r["x"]), int(r["piece"]), int(r["k"]), float(r["lam"]),
                                 float(r["eps"]), float(r["delta"]), float(r["value"]), float(r["threshold"]),
                                 int(bool(r["passed"])), "" if r["witness"] is None else int(r["witness"])))
        out.append(write_csv(os.path.join(outdir, "localization.csv"), LOCAL_HEADER, loc_rows, seed))
    if "dat" in formats:
        series = {}
        for r in table:
            series.setdefault((r[0], r[1]), []).append((r[2], r[4]))
        for (j, e), pts in sorted(series.items()):
            xs, ys = zip(*pts)
            name = f"mass_f{j}_eps{e!r}.dat"
            out.append(write_dat(os.path.join(outdir, name), xs, ys, "λ", "ν(Ω_λ)", seed))
    return out


def _num(v) -> float:
    return float("nan") if v is None else float(v)
