"""Command-line front end.

Exit codes: 0 all contracts hold, 1 a contract failed, 2 invalid input.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import catalog
from .classify import DEFAULT_TOL, classify
from .covering import DEFAULT_SEED, CoveringMap, fiber
from .errors import ConfigError, InvalidCovering, SemiharmError
from .fields import ScalarField
from .harmpoly import HomoPoly, harmonic_decompose, laplacian, neumann_example_check
from .means import mean_gap_identity, module_tol
from .quadrature import RuleSizes
from .residue import harmonic_residue, residue_closed_form, residue_tol

MEANS_HEADER = ["field", "cov", "a", "r", "nu", "solid_re", "solid_im", "spherical_re", "spherical_im",
                "gap_abs", "identity_residual"]
RESIDUE_HEADER = ["r", "res_re", "res_im", "closed_form_re", "closed_form_im", "abs_err"]
OPERATIONS = ("means", "residue", "classify", "decompose", "neumann", "verify")
SCENARIO_KEYS = {
    "operation", "covering", "field", "fields", "centers", "center", "radii", "nodes", "seed", "tol", "out",
    "workers", "alpha", "s", "h", "polynomial", "n",
}


# ---------------------------------------------------------------------------
# formatting


def fmt(x):
    """Float with 17 significant digits."""
    return format(float(x), ".17g")


def _jsonable(obj):
    if isinstance(obj, (bool, type(None), str)):
        return obj
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return _Float(float(obj))
    if isinstance(obj, (complex, np.complexfloating)):
        return [_Float(obj.real), _Float(obj.imag)]
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in obj]
    if hasattr(obj, "__dict__"):
        return _jsonable(vars(obj))
    return str(obj)


class _Float(float):
    pass


def dumps(obj, indent=2):
    """JSON text with every float printed to 17 significant digits."""

    def enc(v, level):
        pad, inner = " " * (indent * level), " " * (indent * (level + 1))
        if isinstance(v, _Float):
            return fmt(v) if math.isfinite(v) else "null"
        if isinstance(v, dict):
            if not v:
                return "{}"
            items = [f"{inner}{json.dumps(k)}: {enc(x, level + 1)}" for k, x in v.items()]
            return "{\n" + ",\n".join(items) + "\n" + pad + "}"
        if isinstance(v, list):
            if not v:
                return "[]"
            if all(not isinstance(x, (dict, list)) for x in v):
                return "[" + ", ".join(enc(x, level + 1) for x in v) + "]"
            return "[\n" + ",\n".join(inner + enc(x, level + 1) for x in v) + "\n" + pad + "]"
        return json.dumps(v)

    return enc(_jsonable(obj), 0) + "\n"


def render_csv(rows, header=MEANS_HEADER):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(row[k]) if isinstance(row[k], (float, np.floating)) else row[k] for k in header])
    return buf.getvalue()


def _point_label(a):
    base = ",".join(_cfmt(b) for b in a.base)
    return f"{base};{_cfmt(a.fiber)}"


def _cfmt(c):
    c = complex(c)
    return f"{fmt(c.real)}{'+' if c.imag >= 0 else '-'}{fmt(abs(c.imag))}i"


# ---------------------------------------------------------------------------
# input parsing


def parse_complex(text):
    if isinstance(text, (int, float)):
        return complex(text)
    t = str(text).strip().replace(" ", "").replace("i", "j")
    try:
        return complex(t)
    except ValueError:
        raise ConfigError(f"cannot read complex number {text!r}") from None


def parse_center(text, cov: CoveringMap):
    """``"z1[,z2][;w]"``: base coordinates, optionally the fiber value to pick."""
    if isinstance(text, (int, float)):
        text = str(text)
    if isinstance(text, list):
        text = ",".join(str(t) for t in text)
    base_txt, _, w_txt = str(text).partition(";")
    base = [parse_complex(t) for t in base_txt.split(",")]
    if len(base) != cov.m:
        raise ConfigError(f"center {text!r} needs {cov.m} base coordinate(s)")
    if np.linalg.norm(np.array(base) - np.array(cov.base_center)) >= cov.base_radius:
        raise ConfigError(f"center {text!r} lies outside the base ball")
    fib = fiber(cov, base)
    if w_txt:
        target = parse_complex(w_txt)
        w = min(fib, key=lambda t: abs(t[0] - target))[0]
    else:
        w = fib[0][0]
    return cov.point(base, w)


def load_covering(value):
    if value is None:
        return catalog.covering("identity")
    if isinstance(value, dict):
        return CoveringMap.from_spec(value)
    text = str(value)
    if text in catalog.COVERING_SPECS:
        return catalog.covering(text)
    path = Path(text)
    if path.exists():
        try:
            return CoveringMap.from_spec(json.loads(path.read_text()))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: line {exc.lineno}: {exc.msg}") from None
    try:
        return CoveringMap.from_spec(json.loads(text))
    except json.JSONDecodeError:
        raise ConfigError(f"unknown covering {text!r} (catalog name, JSON file or inline JSON)") from None


def load_scenario(path):
    try:
        data = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError(f"scenario file {path} not found") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: scenario must be a JSON object")
    unknown = sorted(set(data) - SCENARIO_KEYS)
    if unknown:
        raise ConfigError(f"{path}: unknown scenario key(s) {unknown}")
    if "operation" in data and data["operation"] not in OPERATIONS:
        raise ConfigError(f"{path}: operation must be one of {OPERATIONS}")
    return data


def _merge(args, scenario):
    """Command-line flags override scenario values."""
    cfg = dict(scenario)
    for key, val in vars(args).items():
        if key in ("command", "scenario", "func"):
            continue
        if val is not None:
            cfg[key] = val
    cfg.setdefault("seed", DEFAULT_SEED)
    if cfg.get("tol") is not None and not cfg["tol"] > 0:
        raise ConfigError("tol must be positive")
    if cfg.get("nodes") is not None and int(cfg["nodes"]) < 8:
        raise ConfigError("nodes must be at least 8")
    if cfg.get("workers") is not None and int(cfg["workers"]) < 1:
        raise ConfigError("workers must be at least 1")
    return cfg


def _radii(cfg, cov, default):
    radii = cfg.get("radii", default)
    if isinstance(radii, str):
        radii = [float(r) for r in radii.split(",") if r]
    radii = [float(r) for r in radii]
    if not radii or any(not (0 < r < cov.base_radius) for r in radii):
        raise ConfigError(f"radii must lie strictly inside the base ball (0, {cov.base_radius})")
    return radii


def _sizes(cfg, m):
    if cfg.get("nodes") is None:
        return None
    return RuleSizes(int(cfg["nodes"]), RuleSizes.default(m).radial)


def _workers(cfg):
    return int(cfg.get("workers") or os.cpu_count() or 1)


def _fields(cfg, m):
    texts = cfg.get("fields") or ([cfg["field"]] if cfg.get("field") else None)
    if not texts:
        raise ConfigError("a field expression is required (--field)")
    if isinstance(texts, str):
        texts = [texts]
    return [(t, ScalarField.from_expr(t, m, label=t)) for t in texts]


def _centers(cfg, cov):
    cs = cfg.get("centers") or ([cfg["center"]] if cfg.get("center") is not None else None)
    if cs is None:
        return catalog.centers(cov)
    if isinstance(cs, str):
        cs = [c for c in cs.split("|") if c]
    return [parse_center(c, cov) for c in cs]


# ---------------------------------------------------------------------------
# operations


def means_rows(cov, fields, centers, radii, sizes, workers=1):
    tasks = [(label, f, a, r) for label, f in fields for a in centers for r in radii]

    def one(task):
        label, f, a, r = task
        rep = mean_gap_identity(cov, f, a, r, sizes)
        return {
            "field": label, "cov": cov.label, "a": _point_label(a), "r": float(r), "nu": rep.nu,
            "solid_re": rep.solid.real, "solid_im": rep.solid.imag,
            "spherical_re": rep.spherical.real, "spherical_im": rep.spherical.imag,
            "gap_abs": float(abs(rep.gap)), "identity_residual": rep.identity_residual,
        }

    return _map(one, tasks, workers)


def _map(fn, tasks, workers):
    if workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks))


def _emit(text, cfg, name):
    sys.stdout.write(text)
    if cfg.get("out"):
        out = Path(cfg["out"])
        out.mkdir(parents=True, exist_ok=True)
        (out / name).write_text(text, encoding="utf-8")


def op_means(cfg):
    cov = load_covering(cfg.get("covering"))
    rows = means_rows(cov, _fields(cfg, cov.m), _centers(cfg, cov), _radii(cfg, cov, [0.2, 0.5, 0.9]),
                      _sizes(cfg, cov.m), _workers(cfg))
    _emit(render_csv(rows), cfg, "means.csv")
    tol = cfg.get("tol") or module_tol(cov.m)
    return 0 if all(r["identity_residual"] < tol for r in rows) else 1


def op_residue(cfg):
    cov = load_covering(cfg.get("covering"))
    alpha, s = float(cfg.get("alpha", 1)), float(cfg.get("s", 0))
    if alpha < 0 or s < 0:
        raise ConfigError("alpha and s must be non-negative")
    a = parse_center(cfg.get("center", ",".join(["0"] * cov.m)), cov)
    h_txt = cfg.get("h") or "1"
    center = "[" + ",".join(f"({_cexpr(c)})" for c in a.base) + "]"
    f = ScalarField.from_expr(f"radial_singular({_num(alpha)}, {_num(s)}, {center}, {h_txt})", cov.m)
    h_a = ScalarField.from_expr(h_txt, cov.m).eval(a)
    tol = cfg.get("tol") or residue_tol(cov.m)
    rows = []
    for r in _radii(cfg, cov, [0.2, 0.3, 0.5]):
        res = harmonic_residue(cov, f, a, r, _sizes(cfg, cov.m))
        cf = residue_closed_form(cov.m, alpha, s, r, a.mult, h_a)
        rows.append({"r": float(r), "res_re": res.real, "res_im": res.imag, "closed_form_re": cf.real,
                     "closed_form_im": cf.imag, "abs_err": float(abs(res - cf))})
    _emit(render_csv(rows, RESIDUE_HEADER), cfg, "residue.csv")
    return 0 if all(r["abs_err"] < tol for r in rows) else 1


def _num(x):
    return str(int(x)) if float(x).is_integer() else repr(float(x))


def _cexpr(c):
    return f"{c.real!r} + {c.imag!r}*i"


def op_classify(cfg):
    cov = load_covering(cfg.get("covering"))
    tol = cfg.get("tol") or DEFAULT_TOL
    radii = _radii(cfg, cov, [0.1, 0.2])
    centers = _centers(cfg, cov)
    reports = _map(lambda lf: classify(cov, lf[1], centers, radii, tol, _sizes(cfg, cov.m)),
                   _fields(cfg, cov.m), _workers(cfg))
    payload = [r.to_dict() for r in reports]
    _emit(dumps(payload[0] if len(payload) == 1 else payload), cfg, "classify.json")
    return 0 if all(r.verdict == "semi-harmonic" for r in reports) else 1


def _poly(cfg):
    text = cfg.get("polynomial")
    if not text:
        raise ConfigError("a polynomial is required (--poly)")
    return HomoPoly.parse(text, int(cfg["n"]) if cfg.get("n") else None)


def op_decompose(cfg):
    P = _poly(cfg)
    dec = harmonic_decompose(P)
    lines = [f"P = {P}", f"n = {P.n}, degree = {P.degree}"]
    for j, H in dec.parts:
        lines.append(f"H_{j} = {H}")
    exact = dec.reconstruction == P and all(laplacian(H).is_zero() for _, H in dec.parts)
    lines.append(f"exact = {str(exact).lower()}")
    _emit("\n".join(lines) + "\n", cfg, "decompose.txt")
    return 0 if exact else 1


def op_neumann(cfg):
    cov = load_covering(cfg.get("covering"))
    if not cfg.get("polynomial"):
        raise ConfigError("a polynomial is required (--poly)")
    P = HomoPoly.parse(cfg["polynomial"], int(cfg.get("n") or 2 * cov.m))
    rep = neumann_example_check(P, cov, seed=int(cfg["seed"]))
    tol = cfg.get("tol") or 1e-6
    payload = dict(vars(rep))
    payload["tol"] = tol
    payload["passed"] = rep.boundary_residual < tol and rep.boundary_residual_fd < tol
    _emit(dumps(payload), cfg, "neumann.json")
    return 0 if payload["passed"] else 1


def op_verify(cfg):
    from .verify import run_verify

    summary = run_verify(int(cfg["seed"]), cfg.get("nodes"), _workers(cfg))
    _emit(dumps(summary), cfg, "verify_summary.json")
    return 0 if summary["passed"] else 1


OPS = {"means": op_means, "residue": op_residue, "classify": op_classify, "decompose": op_decompose,
       "neumann": op_neumann, "verify": op_verify}


# ---------------------------------------------------------------------------
# argument parsing


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--scenario", help="scenario JSON file")
    common.add_argument("--nodes", type=int, help="sphere node count override")
    common.add_argument("--seed", type=int, help=f"random seed (default {DEFAULT_SEED})")
    common.add_argument("--tol", type=float, help="contract tolerance")
    common.add_argument("--out", help="directory for report files")
    common.add_argument("--workers", type=int, help="worker pool size (default: logical cores)")
    common.add_argument("--covering", help="catalog name, JSON file or inline JSON covering spec")

    p = argparse.ArgumentParser(prog="semiharm", description="Harmonic analysis on branched polynomial coverings.")
    sub = p.add_subparsers(dest="command", required=True)
    sp = sub.add_parser("means", parents=[common], help="solid/spherical means and the mean-gap identity (CSV)")
    sp.add_argument("--field", action="append", dest="fields", help="field expression (repeatable)")
    sp.add_argument("--centers", help="'z1[,z2][;w]' entries separated by '|'")
    sp.add_argument("--radii", help="comma-separated radii")
    sp = sub.add_parser("residue", parents=[common], help="harmonic residues vs closed forms (CSV)")
    sp.add_argument("--alpha", type=float, help="log exponent alpha >= 0")
    sp.add_argument("--s", type=float, help="extra radial power s >= 0")
    sp.add_argument("--h", help="semi-harmonic factor h (expression)")
    sp.add_argument("--center", help="'z1[,z2][;w]' center of the singularity")
    sp.add_argument("--radii", help="comma-separated radii")
    sp = sub.add_parser("classify", parents=[common], help="semi-harmonicity classifier (JSON)")
    sp.add_argument("--field", action="append", dest="fields", help="field expression (repeatable)")
    sp.add_argument("--centers", help="'z1[,z2][;w]' entries separated by '|'")
    sp.add_argument("--radii", help="comma-separated radii")
    sp = sub.add_parser("decompose", parents=[common], help="exact harmonic decomposition")
    sp.add_argument("--poly", dest="polynomial", help="polynomial in x1..xn")
    sp.add_argument("--n", type=int, help="number of real variables")
    sp = sub.add_parser("neumann", parents=[common], help="polynomial Neumann example check (JSON)")
    sp.add_argument("--poly", dest="polynomial", help="polynomial in x1..xn")
    sp.add_argument("--n", type=int, help="number of real variables")
    sub.add_parser("verify", parents=[common], help="run every invariant suite (JSON summary)")
    sub.add_parser("run", parents=[common], help="run the operation named in --scenario")
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        scenario = load_scenario(args.scenario) if args.scenario else {}
        op = args.command
        if op == "run":
            op = scenario.get("operation")
            if op is None:
                raise ConfigError("scenario has no 'operation'")
        elif scenario.get("operation") not in (None, op):
            raise ConfigError(f"scenario operation {scenario['operation']!r} does not match subcommand {op!r}")
        cfg = _merge(args, scenario)
        return OPS[op](cfg)
    except (ConfigError, InvalidCovering) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SemiharmError as exc:
        print(f"contract failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
