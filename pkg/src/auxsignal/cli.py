"""Command-line front end.

Model files are JSON documents of one of two shapes::

    {"normal": {"theta_map": [[...]], "meas_map": [[...]], "noise_map": [[...]],
                "ineq_lhs": [[...]], "ineq_rhs": [...]},
     "faulty": {...}, "cost": [[...]], "noise_bound": 1.0}

    {"z_minus": {"re": 30, "im": 35}, "z_plus": {...}, "z_fault": {...}}

Either shape may carry a ``"ccp"`` object with :class:`CcpConfig` field
defaults; command-line flags override it.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import fields

import numpy as np

from .ccp import CcpConfig, DesignStatus, design
from .conic import DEFAULT_TOL, SolverError
from .distance import ERROR, FEASIBLE, Phasor, PhasorModelSpec, build_models, feasibility_grid, sweep_xf
from .dual import check_separability
from .model import DesignProblem, StaticModel, validate
from .sigma import Verdict, classify, evaluate_sigma

EXIT_OK, EXIT_USAGE, EXIT_NEGATIVE, EXIT_FAILURE = 0, 1, 2, 3
DETECT_EXIT = {Verdict.NORMAL: 0, Verdict.FAULTY: 4, Verdict.AMBIGUOUS: 5, Verdict.INCONSISTENT: 6}
SEPARATION_BAND = 1e-6

MODEL_KEYS = ("theta_map", "meas_map", "noise_map", "ineq_lhs", "ineq_rhs")
SPEC_KEYS = ("z_minus", "z_plus", "z_fault")


class ModelFileError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def fmt(v) -> str:
    """12 significant digits; fixed spelling for non-finite values."""
    v = float(v)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return f"{v:.12g}"


def _jnum(v):
    v = float(v)
    return fmt(v) if not math.isfinite(v) else float(fmt(v))


# ---------------------------------------------------------------- model files

def _matrix(obj, key, ncols=None):
    try:
        a = np.array(obj, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ModelFileError(f"key '{key}': expected a numeric (nested) array: {exc}") from None
    if a.size == 0:
        return np.zeros((0, ncols or 0))
    if a.ndim != 2:
        raise ModelFileError(f"key '{key}': expected a 2-D nested array, got {a.ndim}-D")
    return a


def _parse_model(obj, label):
    if not isinstance(obj, dict):
        raise ModelFileError(f"key '{label}': expected an object")
    for key in ("theta_map", "meas_map", "noise_map"):
        if key not in obj:
            raise ModelFileError(f"key '{label}.{key}' is missing")
    unknown = set(obj) - set(MODEL_KEYS)
    if unknown:
        raise ModelFileError(f"key '{label}.{sorted(unknown)[0]}' is not recognized")
    meas = _matrix(obj["meas_map"], f"{label}.meas_map")
    lhs = _matrix(obj.get("ineq_lhs", []), f"{label}.ineq_lhs", meas.shape[1])
    try:
        rhs = np.array(obj.get("ineq_rhs", []), dtype=float).reshape(-1)
    except (TypeError, ValueError):
        raise ModelFileError(f"key '{label}.ineq_rhs': expected a numeric array") from None
    return StaticModel(
        _matrix(obj["theta_map"], f"{label}.theta_map"),
        meas,
        _matrix(obj["noise_map"], f"{label}.noise_map"),
        lhs,
        rhs,
    )


def _parse_phasor(obj, key):
    if not isinstance(obj, dict) or set(obj) != {"re", "im"}:
        raise ModelFileError(f"key '{key}': expected {{\"re\": ..., \"im\": ...}}")
    try:
        return Phasor(float(obj["re"]), float(obj["im"]))
    except (TypeError, ValueError) as exc:
        raise ModelFileError(f"key '{key}': {exc}") from None


def parse_model_document(doc):
    """Return ``(problem_or_spec, ccp_defaults)`` from a decoded model document."""
    if not isinstance(doc, dict):
        raise ModelFileError("top level: expected an object")
    ccp = doc.get("ccp", {})
    if not isinstance(ccp, dict):
        raise ModelFileError("key 'ccp': expected an object")
    known = {f.name for f in fields(CcpConfig)}
    for k in ccp:
        if k not in known:
            raise ModelFileError(f"key 'ccp.{k}' is not a CCP setting")
    has_generic = "normal" in doc or "faulty" in doc
    has_spec = any(k in doc for k in SPEC_KEYS)
    if has_generic == has_spec:
        raise ModelFileError("model file must contain either 'normal'/'faulty' or 'z_minus'/'z_plus'/'z_fault', not both or neither")
    if has_spec:
        for k in SPEC_KEYS:
            if k not in doc:
                raise ModelFileError(f"key '{k}' is missing")
        extra = set(doc) - set(SPEC_KEYS) - {"ccp"}
        if extra:
            raise ModelFileError(f"key '{sorted(extra)[0]}' is not recognized")
        spec = PhasorModelSpec(*(_parse_phasor(doc[k], k) for k in SPEC_KEYS))
        return spec, ccp
    for k in ("normal", "faulty", "cost"):
        if k not in doc:
            raise ModelFileError(f"key '{k}' is missing")
    extra = set(doc) - {"normal", "faulty", "cost", "noise_bound", "ccp"}
    if extra:
        raise ModelFileError(f"key '{sorted(extra)[0]}' is not recognized")
    try:
        bound = float(doc.get("noise_bound", 1.0))
    except (TypeError, ValueError):
        raise ModelFileError("key 'noise_bound': expected a number") from None
    problem = DesignProblem(
        _parse_model(doc["normal"], "normal"),
        _parse_model(doc["faulty"], "faulty"),
        _matrix(doc["cost"], "cost"),
        bound,
    )
    report = validate(problem)
    if report:
        raise ModelFileError("; ".join(f"{v.code}: {v.message}" for v in report))
    return problem, ccp


def load_model_file(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ModelFileError(f"cannot read {path}: {exc}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFileError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    return parse_model_document(doc)


def problem_document(problem: DesignProblem) -> dict:
    """Inverse of :func:`parse_model_document` for generic problems."""
    def model(m):
        return {k: getattr(m, k).tolist() for k in MODEL_KEYS}
    return {"normal": model(problem.normal), "faulty": model(problem.faulty),
            "cost": problem.cost.tolist(), "noise_bound": problem.noise_bound}


def spec_document(spec: PhasorModelSpec) -> dict:
    return {k: {"re": getattr(spec, k).re, "im": getattr(spec, k).im} for k in SPEC_KEYS}


# ---------------------------------------------------------------- helpers

_FLAG_FIELDS = {
    "tol": "conic_tol",
    "seed": "rng_seed",
    "gamma0": "gamma0",
    "gamma_max": "gamma_max",
    "zeta": "zeta",
    "max_iters": "max_iters",
    "starts": "n_starts",
}


def make_config(args, file_defaults) -> CcpConfig:
    """Precedence: command-line flag, then the model file's ``ccp`` object, then built-in defaults."""
    values = dict(file_defaults)
    for flag, name in _FLAG_FIELDS.items():
        v = getattr(args, flag, None)
        if v is not None:
            values[name] = v
    return CcpConfig(**values)


def _as_problem(model):
    return build_models(model) if isinstance(model, PhasorModelSpec) else model


def _emit(args, text):
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
        sys.stdout.flush()


def _emit_json(args, doc):
    _emit(args, json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _csv_text(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _vector(values, n, name):
    if values is None:
        raise ModelFileError(f"--{name} is required")
    if len(values) != n:
        raise ModelFileError(f"--{name} needs {n} values, got {len(values)}")
    return np.array(values, dtype=float)


def _info(msg):
    print(msg, file=sys.stderr)


# ---------------------------------------------------------------- commands

def cmd_design(args):
    model, defaults = load_model_file(args.model)
    problem = _as_problem(model)
    res = design(problem, make_config(args, defaults))
    _emit_json(args, {
        "status": res.status.value,
        "theta": [_jnum(v) for v in res.theta_star],
        "cost": _jnum(res.cost),
        "sigma_verified": _jnum(res.sigma_verified),
        "iterations": res.iterations,
    })
    _info(f"design: {res.status.value}, cost {fmt(res.cost)}, sigma {fmt(res.sigma_verified)}")
    if res.status is DesignStatus.SEPARABLE:
        return EXIT_OK
    if res.status is DesignStatus.INSEPARABLE:
        return EXIT_NEGATIVE
    return EXIT_FAILURE


def cmd_verify(args):
    model, _ = load_model_file(args.model)
    problem = _as_problem(model)
    theta = _vector(args.theta, problem.n_theta, "theta")
    tol = args.tol if args.tol is not None else DEFAULT_TOL
    sigma = evaluate_sigma(problem, theta, tol).sigma
    separable = check_separability(problem, theta, tol)
    primal = sigma >= 1
    _emit_json(args, {"sigma": _jnum(sigma), "separable": separable})
    if primal != separable and abs(sigma - 1) > SEPARATION_BAND:
        _info(f"verify: primal sigma {fmt(sigma)} disagrees with dual verdict {separable}")
        return EXIT_FAILURE
    _info(f"verify: sigma {fmt(sigma)}, {'separable' if separable else 'not separable'}")
    return EXIT_OK if separable else EXIT_NEGATIVE


def cmd_grid(args):
    model, _ = load_model_file(args.model)
    tol = args.tol if args.tol is not None else DEFAULT_TOL
    grid = feasibility_grid(_as_problem(model), (args.re_min, args.re_max), (args.im_min, args.im_max),
                            args.n, args.n, tol, args.workers)
    label = {FEASIBLE: "1", ERROR: "err"}
    rows = [[fmt(re), fmt(im), label.get(s, "0")] for re, im, s in grid.rows()]
    _emit(args, _csv_text(["theta_re", "theta_im", "separable"], rows))
    _info(f"grid: {grid.n_feasible} of {grid.states.size} signals separable, {grid.n_errors} errors")
    return EXIT_OK


def cmd_sweep(args):
    model, defaults = load_model_file(args.model)
    if not isinstance(model, PhasorModelSpec):
        raise ModelFileError("sweep needs a distance model file (z_minus/z_plus/z_fault)")
    rows = sweep_xf(model, args.xf_min, args.xf_max, args.n, make_config(args, defaults), args.workers)
    out = [[fmt(r.xf), fmt(r.theta_re), fmt(r.theta_im), fmt(r.theta_abs), fmt(r.cost), fmt(r.sigma), r.status]
           for r in rows]
    _emit(args, _csv_text(["xf", "theta_re", "theta_im", "theta_abs", "cost", "sigma", "status"], out))
    _info(f"sweep: {sum(r.status == 'Separable' for r in rows)} of {len(rows)} points separable")
    return EXIT_OK


def cmd_detect(args):
    model, _ = load_model_file(args.model)
    problem = _as_problem(model)
    theta = _vector(args.theta, problem.n_theta, "theta")
    x_obs = _vector(args.x_obs, problem.n_x, "x-obs")
    c = classify(problem, theta, x_obs)
    _emit_json(args, {"verdict": c.verdict.value, "rho0": _jnum(c.rho0), "rho1": _jnum(c.rho1)})
    _info(f"detect: {c.verdict.value} (rho0 {fmt(c.rho0)}, rho1 {fmt(c.rho1)})")
    return DETECT_EXIT[c.verdict]


def build_parser():
    p = _Parser(prog="auxsignal", description="Auxiliary signal design for two-mode static systems.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, ccp=True):
        sp.add_argument("model", help="model file (JSON)")
        sp.add_argument("--out", help="write the result here instead of standard output")
        sp.add_argument("--tol", type=float, help=f"conic tolerance (default {DEFAULT_TOL:g})")
        if ccp:
            sp.add_argument("--seed", type=int)
            sp.add_argument("--gamma0", type=float)
            sp.add_argument("--gamma-max", type=float)
            sp.add_argument("--zeta", type=float)
            sp.add_argument("--max-iters", type=int)
            sp.add_argument("--starts", type=int)

    sp = sub.add_parser("design", help="optimize the auxiliary signal")
    common(sp)
    sp.set_defaults(func=cmd_design)

    sp = sub.add_parser("verify", help="check one signal by both the primal and dual routes")
    common(sp, ccp=False)
    sp.add_argument("--theta", type=float, nargs="+")
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("grid", help="separability over a grid of complex signals")
    common(sp, ccp=False)
    sp.add_argument("--re-min", type=float, default=-3.0)
    sp.add_argument("--re-max", type=float, default=3.0)
    sp.add_argument("--im-min", type=float, default=-3.0)
    sp.add_argument("--im-max", type=float, default=3.0)
    sp.add_argument("--n", type=int, default=41, help="nodes per axis")
    sp.add_argument("--workers", type=int, default=1)
    sp.set_defaults(func=cmd_grid)

    sp = sub.add_parser("sweep", help="optimal signal versus fault-path reactance")
    common(sp)
    sp.add_argument("--xf-min", type=float, default=12.0)
    sp.add_argument("--xf-max", type=float, default=58.0)
    sp.add_argument("--n", type=int, default=24, help="number of reactance values")
    sp.add_argument("--workers", type=int, default=1)
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("detect", help="classify an observation")
    common(sp, ccp=False)
    sp.add_argument("--theta", type=float, nargs="+")
    sp.add_argument("--x-obs", type=float, nargs="+")
    sp.set_defaults(func=cmd_detect)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ModelFileError as exc:
        _info(f"auxsignal {args.command}: {exc}")
        return EXIT_USAGE
    except ValueError as exc:
        _info(f"auxsignal {args.command}: {exc}")
        return EXIT_USAGE
    except SolverError as exc:
        _info(f"auxsignal {args.command}: solver failure: {exc}")
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
