"""Command line front end.

Exit codes: 0 success, 1 invalid input or usage, 2 internal or I/O error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import __version__
from ._util import ValidationError
from .config import load_any
from .report import dumps_json, emit_report, write_csv, write_json

EXIT_OK, EXIT_INVALID, EXIT_INTERNAL = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _read_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError as exc:
        raise ValidationError(f"no such file: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path} is not valid JSON: {exc}") from exc


def _emit(text: str, out):
    if out:
        d = os.path.dirname(os.path.abspath(out))
        os.makedirs(d, exist_ok=True)
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _kernel_cfg(a) -> dict:
    cfg = {"kind": a.kind, "p": a.p}
    if a.dimension is not None:
        cfg["dimension"] = a.dimension
    if a.coord is not None:
        cfg["coord"] = a.coord
    if a.y is not None:
        cfg["y"] = [float(v) for v in a.y.split(",")]
    if a.expr is not None:
        cfg["expr"] = a.expr
    if a.beta is not None:
        cfg["beta"] = a.beta
    if a.B is not None:
        cfg["B"] = a.B
    return cfg


def _add_kernel_args(sp):
    sp.add_argument("--kind", default="riesz",
                    choices=["riesz", "dual_riesz", "hilbert", "zero", "inverse_norm", "expr"])
    sp.add_argument("--coord", type=int, help="coordinate for the Riesz kernel (1-based)")
    sp.add_argument("--p", default="2", help="exponent of the norm, or 'inf'")
    sp.add_argument("--dimension", type=int)
    sp.add_argument("--y", help="comma separated dual vector for dual_riesz")
    sp.add_argument("--expr", help="kernel expression, e.g. 'x[1]/norm^2'")
    sp.add_argument("--beta", type=float)
    sp.add_argument("--B", type=float)


def _p_value(p):
    return p if p in ("inf", "sup") else float(p)


# ---------------------------------------------------------------- subcommands

def cmd_embed(a):
    from .space import FiniteMetricSpace, embedding_error, kuratowski_embed
    M = FiniteMetricSpace.from_json(_read_json(a.space))
    E = kuratowski_embed(M)
    _emit(dumps_json({"coords": E.coords, "max_error": embedding_error(M, E)}), a.out)


def _curve_from_args(a):
    from .curve import load_curve, make_curve
    if a.file:
        return load_curve(a.file)
    kw = {"K": a.K}
    if a.name == "graph":
        kw.update(eps=a.amplitude, seed=a.seed)
    return make_curve(a.name, **kw)


def cmd_curve_check(a):
    from .curve import (bilipschitz_violations, check_injective, curve_integral, fit_metadata, flatness_check,
                        speed_discrepancy)
    c = _curve_from_args(a)
    check_injective(c)
    meta = fit_metadata(c, alpha=a.alpha)
    viol = bilipschitz_violations(c, meta)
    flat = flatness_check(c, meta)
    doc = {"curve": c.name, "samples": len(c), "metadata": meta.to_json(),
           "violations": {k: int(v) for k, v in viol.items()},
           "flatness": {"ratio": flat.ratio, "c": flat.c, "passed": bool(flat.passed)},
           "length": curve_integral(c, lambda x: np.ones(len(x))),
           "speed_discrepancy": speed_discrepancy(c)}
    _emit(dumps_json(doc), a.out)


def cmd_kernel_check(a):
    from .kernel import homogeneity_defect, kernel_from_config, verify_growth, verify_holder
    cfg = _kernel_cfg(a)
    cfg["p"] = _p_value(a.p)
    K = kernel_from_config(cfg)
    g = verify_growth(K, seed=a.seed)
    h = verify_holder(K, seed=a.seed)
    doc = {"kernel": K.to_json(), "growth": g.to_json(), "holder": h.to_json(),
           "homogeneity_defect": homogeneity_defect(K, seed=a.seed),
           "certified": bool(g.passed and h.passed)}
    _emit(dumps_json(doc), a.out)


def cmd_sio_eval(a):
    from .curve import discretize_H1
    from .expr import compile_expression
    from .kernel import kernel_from_config
    from .sio import SingularIntegral, sio_rows
    c = _curve_from_args(a)
    mu = discretize_H1(c)
    cfg = _kernel_cfg(a)
    cfg["p"] = _p_value(a.p)
    cfg.setdefault("dimension", c.space.dimension)
    K = kernel_from_config(cfg)
    f = compile_expression(a.f, mu.space.coords.shape[1], mu.space.norm.norm)(mu.space.coords)
    eps = [float(e) for e in a.eps.split(",")]
    rows = sio_rows(SingularIntegral(K, mu), f, eps)
    header = ["point", "ε", "T_{ν,ε}f", "T_{ν,*}f", "M_νf"]
    from .sio import rows_to_csv
    _emit(rows_to_csv(header, rows, a.seed), a.out)


def cmd_whitney(a):
    from .space import DiscreteMeasure, FiniteMetricSpace
    from .whitney import christ_cubes, classify_doubling, whitney_decompose
    M = FiniteMetricSpace.from_json(_read_json(a.space))
    om = _read_json(a.omega)
    if isinstance(om, dict):
        om = om.get("omega", om.get("indices"))
    if not isinstance(om, list):
        raise ValidationError("omega file must hold a list of point indices or booleans")
    omega = np.array(om, dtype=bool) if om and isinstance(om[0], bool) else np.array(om, dtype=int)
    tree = christ_cubes(M, seed=a.seed)
    W = whitney_decompose(tree, omega)
    nu = DiscreteMeasure(M, np.full(len(M), 1.0 / len(M)))
    cl = classify_doubling(W, nu)
    doc = {"tree": {"k_min": tree.k_min, "k_max": tree.k_max, "attempt": tree.attempt},
           "decomposition": W.to_json(), "doubling_classes": cl.to_json(), "ok": W.ok}
    _emit(dumps_json(doc), a.out)
    if not W.ok:
        raise ValidationError("decomposition properties failed; see the certificates")


def _run_pipeline(a):
    from .goodlambda import run_theorem_pipeline
    cfg = load_any(a.config)
    if a.seed is not None:
        cfg.seed = a.seed
    return cfg, run_theorem_pipeline(cfg.pipeline_config())


def cmd_goodlambda(a):
    cfg, rep = _run_pipeline(a)
    out = a.out or cfg.output_dir
    from .report import GOODLAMBDA_HEADER, goodlambda_rows
    os.makedirs(out, exist_ok=True)
    write_csv(os.path.join(out, "goodlambda.csv"), GOODLAMBDA_HEADER, goodlambda_rows(rep["goodlambda"]["rows"]),
              cfg.seed)
    write_json(os.path.join(out, "goodlambda.json"),
               {"seed": cfg.seed, "constants": rep["constants"], "goodlambda": rep["goodlambda"],
                "localization": rep["localization"]})
    print(f"good-lambda violations: {rep['goodlambda']['violations']} of {rep['goodlambda']['checked']}")
    if rep["goodlambda"]["violations"]:
        return EXIT_INVALID
    return EXIT_OK


def cmd_pipeline(a):
    cfg, rep = _run_pipeline(a)
    out = a.out or cfg.output_dir
    paths = emit_report(rep, out, cfg.seed, cfg.formats)
    print(f"wrote {len(paths)} files to {out}; passed={rep['passed']}")
    return EXIT_OK if rep["passed"] else EXIT_INVALID


def cmd_report(a):
    rep = _read_json(a.input)
    seed = rep.get("seed", rep.get("config", {}).get("seed", 0))
    paths = emit_report(rep, a.out, seed)
    print(f"wrote {len(paths)} files to {a.out}")


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="czcurve", description="Singular integrals on curves: checks, decompositions, reports.")
    p.add_argument("--version", action="version", version=f"czcurve {__version__}")
    sub = p.add_subparsers(dest="command", parser_class=_Parser, required=True)

    sp = sub.add_parser("embed", help="isometric sup-norm embedding of a finite metric space")
    sp.add_argument("--space", required=True, help="space JSON ({points, dist} or {coords, norm})")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_embed)

    def curve_args(sp):
        sp.add_argument("--name", default="circle", help="generator name (circle, line, graph, helix, ...)")
        sp.add_argument("--file", help="curve JSON instead of a generator")
        sp.add_argument("--K", type=int, default=512)
        sp.add_argument("--amplitude", type=float, default=0.1, help="perturbation size for 'graph'")
        sp.add_argument("--seed", type=int, default=0)

    sp = sub.add_parser("curve-check", help="metadata, bilipschitz window, flatness and injectivity")
    curve_args(sp)
    sp.add_argument("--alpha", type=float, default=1.0)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_curve_check)

    sp = sub.add_parser("kernel-check", help="fit and certify kernel constants")
    _add_kernel_args(sp)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_kernel_check)

    sp = sub.add_parser("sio-eval", help="truncated and maximal singular integrals on a curve, as CSV")
    curve_args(sp)
    _add_kernel_args(sp)
    sp.add_argument("--f", default="1", help="function of the coordinates, e.g. 'cos(3*x[1])'")
    sp.add_argument("--eps", dest="eps", default="0.01,0.1", help="comma separated truncation radii")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_sio_eval)

    sp = sub.add_parser("whitney", help="cube tree and Whitney decomposition of a subset")
    sp.add_argument("--space", required=True)
    sp.add_argument("--omega", required=True, help="JSON list of indices (or booleans) of the subset")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_whitney)

    for name, fn, hlp in (("goodlambda", cmd_goodlambda, "good-lambda sweep tables"),
                          ("pipeline", cmd_pipeline, "full report directory")):
        sp = sub.add_parser(name, help=hlp)
        sp.add_argument("--config", required=True)
        sp.add_argument("--out", help="output directory (default: the config's output_dir)")
        sp.add_argument("--seed", type=int)
        sp.set_defaults(func=fn)

    sp = sub.add_parser("report", help="re-emit tables and plot data from a saved report.json")
    sp.add_argument("--input", required=True)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_INVALID
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    try:
        code = args.func(args)
        return EXIT_OK if code is None else int(code)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except Exception as exc:  # noqa: BLE001
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
