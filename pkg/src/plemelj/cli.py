"""``plemelj`` command line.

Every subcommand reads a JSON config (``"schema": 1``) naming a curve, a
density and the targets, applies flag overrides (flags win), runs the library
and writes ``report.json`` plus ``trace.csv`` / ``convergence.csv`` where they
apply. Exit status: 0 converged/exists, 2 not-converged/fails, 1 usage or IO
error.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__
from .curve import CURVE_NAMES, Curve, curve_from_points, make_builtin_curve, normalize_at
from .density import DENSITY_NAMES, builtin_density, classify_regularity, estimate_modulus, regularity_report, \
    tabulated_density
from .exceptions import ConfigError, ConvergenceError, PlemeljError
from .io import locate, read_points, read_tabulated, write_classification, write_convergence, write_csv, \
    write_json, write_trace
from .pv import PVConfig, offset_numerator, pv_curve, pv_exists_predicate
from .transform import SIDES, TransformConfig, boundary_values, evaluate_transform, make_sequence, \
    run_convergence, thread_count, verify_jump

EXIT_OK, EXIT_USAGE, EXIT_FAIL = 0, 1, 2
OPERATIONS = ("pv", "transform", "boundary", "converge", "classify", "exists", "verify-jump")

_num_list = {"type": "array", "items": {"type": "number"}}
CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["schema", "curve", "density"],
    "additionalProperties": False,
    "properties": {
        "schema": {"const": 1},
        "operation": {"enum": list(OPERATIONS)},
        "curve": {
            "oneOf": [
                {"type": "object", "required": ["builtin"], "additionalProperties": False,
                 "properties": {"builtin": {"enum": list(CURVE_NAMES)}, "params": _num_list}},
                {"type": "object", "required": ["points_file"], "additionalProperties": False,
                 "properties": {"points_file": {"type": "string"}, "closed": {"type": "boolean"}}},
            ]
        },
        "density": {
            "oneOf": [
                {"type": "object", "required": ["builtin"], "additionalProperties": False,
                 "properties": {"builtin": {"enum": list(DENSITY_NAMES)}, "params": _num_list}},
                {"type": "object", "required": ["csv"], "additionalProperties": False,
                 "properties": {"csv": {"type": "string"}, "max_gap": {"type": "number", "exclusiveMinimum": 0}}},
            ]
        },
        "targets": {"type": "array", "items": {"type": "number"}, "minItems": 1},
        "points": {"type": "array", "minItems": 1,
                   "items": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}},
        "method": {"enum": ["auto", "excision", "subtraction", "pullback"]},
        "side": {"enum": list(SIDES)},
        "shape": {"enum": ["normal", "tangential", "tangential-graph"]},
        "offset_ratio": {"type": "number", "exclusiveMinimum": 0},
        "abs_tol": {"type": "number", "exclusiveMinimum": 0},
        "rel_tol": {"type": "number", "exclusiveMinimum": 0},
        "tol": {"type": "number", "exclusiveMinimum": 0},
        "depth": {"type": "integer", "minimum": 8, "maximum": 60},
        "n_max": {"type": "integer", "minimum": 6, "maximum": 40},
        "n_pairs": {"type": "integer", "minimum": 1000},
        "seed": {"type": "integer", "minimum": 0, "maximum": 2 ** 64 - 1},
        "out": {"type": "string"},
    },
}

_cplx = {"type": "object", "required": ["re", "im"],
         "properties": {"re": {"type": ["number", "null"]}, "im": {"type": ["number", "null"]}}}
REPORT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["schema", "operation", "seed", "settings", "curve", "density", "verdict", "exit_code", "results"],
    "properties": {
        "schema": {"const": 1},
        "operation": {"enum": list(OPERATIONS)},
        "seed": {"type": "integer", "minimum": 0},
        "settings": {"type": "object"},
        "curve": {"type": "object"},
        "density": {"type": "object"},
        "verdict": {"type": "string"},
        "exit_code": {"enum": [0, 2]},
        "results": {"type": "array"},
    },
    "$defs": {"complex": _cplx},
}

DEFAULTS = {
    "method": "auto", "side": "left", "shape": "normal", "offset_ratio": 0.5,
    "abs_tol": 1e-10, "rel_tol": 1e-9, "tol": 1e-6, "depth": 40, "n_pairs": 4000, "seed": 0,
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="plemelj", description="Principal values, Cauchy transforms and Plemelj boundary values.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    helps = {
        "pv": "principal value at each target parameter",
        "transform": "Cauchy transform at the config's off-curve points",
        "boundary": "Plemelj boundary values at each target",
        "converge": "approach a target from one side and compare with the boundary value",
        "classify": "estimate the modulus of continuity and classify regularity",
        "exists": "numerical L1 test for existence of the principal value at a target",
        "verify-jump": "jump and sum residuals from independent left and right runs",
    }
    for name in OPERATIONS:
        s = sub.add_parser(name, help=helps[name])
        s.add_argument("--config", required=True, help="JSON experiment config")
        s.add_argument("--out", help="output directory (default: current directory)")
        s.add_argument("--seed", type=int, help="random seed (recorded in every output)")
        s.add_argument("--abs-tol", type=float, dest="abs_tol", help="absolute principal-value tolerance")
        s.add_argument("--tol", type=float, help="convergence tolerance for approach experiments")
        s.add_argument("--depth", type=int, help="deepest excision level k (eps = 2^-k)")
        s.add_argument("--side", choices=SIDES)
        s.add_argument("--shape", choices=("normal", "tangential"))
    return p


def load_config(path, overrides: dict) -> dict:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror or exc}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}") from exc
    validator = jsonschema.Draft202012Validator(CONFIG_SCHEMA)
    errors = sorted(validator.iter_errors(raw), key=lambda e: (locate(text, list(e.absolute_path)), str(e.path)))
    if errors:
        lines = []
        for e in errors:
            where = "/".join(str(k) for k in e.absolute_path) or "<root>"
            lines.append(f"{path}:{locate(text, list(e.absolute_path))}: {where}: {e.message}")
        raise ConfigError("\n".join(lines))
    cfg = {**DEFAULTS, **raw}
    for key, value in overrides.items():
        if value is not None:
            cfg[key] = value
    for key, lo in (("abs_tol", 0.0), ("tol", 0.0)):
        if cfg[key] <= lo:
            raise ConfigError(f"--{key.replace('_', '-')} must be positive")
    if not 8 <= cfg["depth"] <= 60:
        raise ConfigError("--depth must lie in [8, 60]")
    if not 0 <= cfg["seed"] < 2 ** 64:
        raise ConfigError("--seed must be an unsigned 64-bit integer")
    cfg["_base"] = path.parent
    return cfg


def _resolve(cfg, name):
    p = Path(name)
    return p if p.is_absolute() else cfg["_base"] / p


def build_curve(cfg) -> Curve:
    entry = cfg["curve"]
    if "builtin" in entry:
        return make_builtin_curve(entry["builtin"], entry.get("params", []))
    pts, closed = read_points(_resolve(cfg, entry["points_file"]))
    if "closed" in entry:
        closed = entry["closed"]
    return curve_from_points(pts, bool(closed))


def build_density(cfg):
    entry = cfg["density"]
    if "builtin" in entry:
        return builtin_density(entry["builtin"], entry.get("params", []))
    tau, vals = read_tabulated(_resolve(cfg, entry["csv"]))
    return tabulated_density(tau, vals, entry.get("max_gap"))


def _targets(cfg, c: Curve):
    if "targets" in cfg:
        return [float(t) for t in cfg["targets"]]
    a, b = c.domain
    return [0.0 if c.closed else 0.5 * (a + b)]


def _configs(cfg):
    pv = PVConfig(abs_tol=cfg["abs_tol"], rel_tol=cfg["rel_tol"]).with_depth(cfg["depth"])
    return pv, TransformConfig(pv=pv, tol=cfg["tol"])


def _pv_entry(tau, r):
    return {"tau": tau, "value": r.value, "error_estimate": r.error_estimate, "method": r.method,
            "converged": r.converged, "richardson_applied": r.richardson_applied}


def _run_pv(cfg, c, d, out):
    pv, _ = _configs(cfg)
    results, ok = [], True
    taus = _targets(cfg, c)
    for k, tau in enumerate(taus):
        r = pv_curve(c, d, tau, pv, method=cfg["method"])
        ok &= r.converged
        results.append(_pv_entry(tau, r))
        if r.excision_trace:
            write_trace(out / ("trace.csv" if len(taus) == 1 else f"trace-{k}.csv"), r.excision_trace, cfg["seed"])
    return results, ok


def _run_transform(cfg, c, d, out):
    _, tc = _configs(cfg)
    if "points" not in cfg:
        raise ConfigError("transform needs 'points' in the config")
    results, ok = [], True
    for re_, im_ in cfg["points"]:
        v = evaluate_transform(c, d, complex(re_, im_), tc)
        ok &= v.converged
        results.append({"z": complex(re_, im_), "value": v.value, "error": v.error, "converged": v.converged,
                        "distance": v.distance})
    return results, ok


def _run_boundary(cfg, c, d, out):
    _, tc = _configs(cfg)
    results, ok = [], True
    for tau in _targets(cfg, c):
        bv = boundary_values(c, d, tau, tc, method=cfg["method"])
        ok &= bv.converged
        results.append({"tau": tau, "point": bv.point, "phi_plus": bv.phi_plus, "phi_minus": bv.phi_minus,
                        "pv_part": bv.pv_part, "density_value": bv.density_value, "converged": bv.converged,
                        "pv": _pv_entry(tau, bv.pv)})
    return results, ok


def _sequence(cfg, c, tau, side):
    frame = normalize_at(c, tau)
    seq = make_sequence(c, frame, side, cfg["shape"], offset_ratio=cfg["offset_ratio"])
    if "n_max" in cfg:
        keep = seq.levels <= cfg["n_max"]
        seq = type(seq)(seq.target, seq.tau, side, seq.shape, seq.radii[keep], seq.points[keep], seq.levels[keep],
                        seq.offset_ratio)
    return seq


def _run_converge(cfg, c, d, out):
    _, tc = _configs(cfg)
    tau = _targets(cfg, c)[0]
    seq = _sequence(cfg, c, tau, cfg["side"])
    rep = run_convergence(c, d, seq, tc)
    write_convergence(out / "convergence.csv", rep.records, cfg["seed"])
    return [{"tau": tau, "side": rep.side, "target": rep.target, "limit": rep.limit, "verdict": rep.verdict,
             "final_error": rep.final_error, "truncated": rep.truncated, "message": rep.message,
             "n_records": len(rep.records)}], rep.converged


def _run_classify(cfg, c, d, out):
    m = estimate_modulus(d, c, cfg["n_pairs"], seed=cfg["seed"])
    reg = classify_regularity(m)
    rep = regularity_report(m, reg)
    write_classification(out / "classification.json", rep, cfg["seed"])
    write_csv(out / "modulus.csv", ("t", "omega", "omega_se"), zip(m.grid, m.omega, m.omega_se), cfg["seed"])
    return [{**rep, "label": str(reg), "n_pairs": m.n_pairs}], reg.label != "inconclusive"


def _run_exists(cfg, c, d, out):
    pv, _ = _configs(cfg)
    results, ok = [], True
    for tau in _targets(cfg, c):
        frame = normalize_at(c, tau)
        num = offset_numerator(c, d, frame)
        a, b = c.domain
        w = 0.5 * c.period if c.closed else min(frame.tau0 - a, b - frame.tau0)

        def f(x, num=num, w=w):
            return num(w * np.asarray(x, dtype=float))

        r = pv_exists_predicate(f, pv)
        ok &= r.exists
        results.append({"tau": tau, "verdict": r.verdict, "l1_estimate": r.l1_estimate, "exponent": r.exponent,
                        "rate": r.rate, "pv": r.pv, "window": w})
        write_csv(out / ("trace.csv" if len(results) == 1 else f"trace-{len(results) - 1}.csv"),
                  ("delta", "l1_partial"), r.trace, cfg["seed"])
    return results, ok


def _run_verify_jump(cfg, c, d, out):
    _, tc = _configs(cfg)
    tau = _targets(cfg, c)[0]
    depth = cfg.get("n_max", 20)
    try:
        rep = verify_jump(c, d, tau, tc, depth=depth, shape=cfg["shape"])
    except ConvergenceError as exc:
        return [{"tau": tau, "verdict": "not-converged", "message": str(exc)}], False
    for lim in (rep.left, rep.right):
        recs = [type(r)(r.n, r.z, r.phi, abs(r.phi - lim.value), r.quad_error) for r in lim.records]
        write_convergence(out / f"convergence-{lim.side}.csv", recs, cfg["seed"])
    return [{"tau": tau, "jump_residual": rep.jump_residual, "sum_residual": rep.sum_residual,
             "left_limit": rep.left.value, "right_limit": rep.right.value,
             "left_error": rep.left.error, "right_error": rep.right.error,
             "density_value": rep.boundary.density_value, "pv_part": rep.boundary.pv_part,
             "tol": rep.tol, "holds": rep.holds}], rep.holds


RUNNERS = {
    "pv": _run_pv, "transform": _run_transform, "boundary": _run_boundary, "converge": _run_converge,
    "classify": _run_classify, "exists": _run_exists, "verify-jump": _run_verify_jump,
}
VERDICTS = {
    "pv": ("converged", "not-converged"), "transform": ("converged", "not-converged"),
    "boundary": ("converged", "not-converged"), "converge": ("converged", "not-converged"),
    "classify": ("classified", "inconclusive"), "exists": ("exists", "fails"),
    "verify-jump": ("holds", "fails"),
}


def run(cfg: dict, operation: str) -> int:
    out = Path(cfg.get("out") or ".")
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory {out}: {exc.strerror or exc}") from exc
    threads = thread_count()
    c = build_curve(cfg)
    d = build_density(cfg)
    results, ok = RUNNERS[operation](cfg, c, d, out)
    if operation == "exists" and not ok and any(r["verdict"] == "inconclusive" for r in results):
        verdict = "inconclusive"
    else:
        verdict = VERDICTS[operation][0 if ok else 1]
    code = EXIT_OK if ok else EXIT_FAIL
    settings = {k: cfg.get(k) for k in ("method", "side", "shape", "offset_ratio", "abs_tol", "rel_tol", "tol",
                                        "depth", "n_max", "n_pairs")}
    settings["threads"] = threads
    report = {
        "schema": 1, "operation": operation, "seed": cfg["seed"], "settings": settings,
        "curve": cfg["curve"], "density": cfg["density"], "verdict": verdict, "exit_code": code,
        "results": results,
    }
    write_json(out / "report.json", report)
    return code


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        thread_count()
        overrides = {"out": args.out, "seed": args.seed, "abs_tol": args.abs_tol, "tol": args.tol,
                     "depth": args.depth, "side": args.side, "shape": args.shape}
        cfg = load_config(args.config, overrides)
        if cfg.get("operation", args.command) != args.command:
            raise ConfigError(f"config is for operation {cfg['operation']!r}, not {args.command!r}")
        return run(cfg, args.command)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (PlemeljError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
