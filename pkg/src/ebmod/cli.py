"""Command-line front end: ``ebmod endset|analyze|linsys|minnorm|verify-paper``.

Problem files are JSON documents validated against :data:`PROBLEM_SCHEMA`.
Reports go to stdout (``--json`` for the machine-readable form); diagnostics
go to stderr.  Exit codes: 0 success, 1 input error, 2 numerical failure,
3 fixture mismatch.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
import time
from dataclasses import dataclass

import jsonschema
import numpy as np

from . import fixtures
from .core import (DEFAULT_TOL, CapacityError, EbmodError, InputError, NumericalFailure, PointSet,
                   SamplingConfig, Tolerances, as_vector)
from .endset import end_set_distance, end_set_member, gauge
from .estimator import Scenario, sandwich_report
from .linsys import Curve, LinearSystem, index_collection, modulus_formula, regularity_probe
from .maxfunc import MaxFunction, SmoothPiece, inclusion_probe
from .solvers import ConvexPiece, min_norm_point

EXIT_OK, EXIT_INPUT, EXIT_NUMERICAL, EXIT_MISMATCH = 0, 1, 2, 3
SCHEMA_VERSION = 1

_vec = {"type": "array", "items": {"type": "number"}, "minItems": 1}
_mat = {"type": "array", "items": _vec, "minItems": 1}
_num = {"type": "number"}

PROBLEM_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["schema_version", "kind"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "kind": {"enum": ["point_set", "max_function", "linear_system_finite",
                          "linear_system_curve", "builtin"]},
        "base_point": _vec,
        "tolerances": {
            "type": "object",
            "additionalProperties": False,
            "properties": {k: {"type": "number", "exclusiveMinimum": 0}
                           for k in ("eq_tol", "active_tol", "lp_margin", "dist_tol")},
        },
        "points": _mat,
        "labels": {"type": "array"},
        "pieces": {"type": "array", "minItems": 1, "items": {"oneOf": [
            {"type": "object", "additionalProperties": False, "required": ["type", "a", "b"],
             "properties": {"type": {"const": "affine"}, "a": _vec, "b": _num}},
            {"type": "object", "additionalProperties": False, "required": ["type", "Q", "b"],
             "properties": {"type": {"const": "quadratic"}, "Q": _mat, "b": _vec, "c": _num}},
        ]}},
        "level_set": {"type": "array", "minItems": 1, "items": {"oneOf": [
            {"type": "object", "additionalProperties": False, "required": ["type", "a", "b"],
             "properties": {"type": {"const": "halfspace"}, "a": _vec, "b": _num}},
            {"type": "object", "additionalProperties": False, "required": ["type", "center", "radius"],
             "properties": {"type": {"const": "ball"}, "center": _vec,
                            "radius": {"type": "number", "exclusiveMinimum": 0}}},
            {"type": "object", "additionalProperties": False, "required": ["type", "coord"],
             "properties": {"type": {"const": "interval"}, "coord": {"type": "integer", "minimum": 0},
                            "lo": _num, "hi": _num}},
        ]}},
        "rows": {"type": "array", "minItems": 1, "items": {
            "type": "object", "additionalProperties": False, "required": ["a", "b"],
            "properties": {"a": _vec, "b": _num}}},
        "curve": {"enum": ["circle-weighted", "circle-unit"]},
        "table": {"type": "object", "additionalProperties": False, "required": ["t", "a", "b"],
                  "properties": {"t": _vec, "a": _mat, "b": _vec}},
        "grid": {"type": "integer", "minimum": 8},
        "name": {"enum": list(fixtures.BUILTINS)},
    },
    "additionalProperties": False,
    "allOf": [
        {"if": {"properties": {"kind": {"const": "point_set"}}}, "then": {"required": ["points"]}},
        {"if": {"properties": {"kind": {"const": "max_function"}}}, "then": {"required": ["pieces"]}},
        {"if": {"properties": {"kind": {"const": "linear_system_finite"}}}, "then": {"required": ["rows"]}},
        {"if": {"properties": {"kind": {"const": "linear_system_curve"}}},
         "then": {"oneOf": [{"required": ["curve"]}, {"required": ["table"]}]}},
        {"if": {"properties": {"kind": {"const": "builtin"}}}, "then": {"required": ["name"]}},
    ],
}

_PAYLOAD_KEYS = ("points", "labels", "pieces", "level_set", "rows", "curve", "table", "grid", "name")


@dataclass(frozen=True)
class ProblemFile:
    schema_version: int
    kind: str
    payload: dict
    base_point: tuple | None = None
    tolerances: dict | None = None

    def to_dict(self) -> dict:
        out = {"schema_version": self.schema_version, "kind": self.kind, **self.payload}
        if self.base_point is not None:
            out["base_point"] = list(self.base_point)
        if self.tolerances is not None:
            out["tolerances"] = dict(self.tolerances)
        return out

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


def parse_problem(text: str) -> ProblemFile:
    """Parse and validate a problem document; errors name the line or field."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    validator = jsonschema.Draft202012Validator(PROBLEM_SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.path))
    if errors:
        msgs = [f"field /{'/'.join(str(p) for p in e.path)}: {e.message}" for e in errors[:5]]
        raise InputError("problem file rejected:\n  " + "\n  ".join(msgs))
    payload = {k: doc[k] for k in _PAYLOAD_KEYS if k in doc}
    bp = tuple(doc["base_point"]) if "base_point" in doc else None
    return ProblemFile(doc["schema_version"], doc["kind"], payload, bp, doc.get("tolerances"))


def load_problem(path: str) -> ProblemFile:
    try:
        with open(path, encoding="utf-8") as fh:
            return parse_problem(fh.read())
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None


# -- building domain objects --------------------------------------------------
def build_point_set(pf: ProblemFile) -> PointSet:
    if pf.kind != "point_set":
        raise InputError(f"expected a point_set problem, got {pf.kind}")
    pts = pf.payload["points"]
    if len({len(p) for p in pts}) != 1:
        raise InputError("field /points: points have mixed dimensions")
    return PointSet(pts, pf.payload.get("labels"))


def build_max_function(pf: ProblemFile) -> MaxFunction:
    pieces = []
    for p in pf.payload["pieces"]:
        if p["type"] == "affine":
            pieces.append(SmoothPiece.affine(p["a"], p["b"]))
        else:
            pieces.append(SmoothPiece.quadratic(p["Q"], p["b"], p.get("c", 0.0)))
    return MaxFunction(pieces)


def _build_piece(p: dict) -> ConvexPiece:
    if p["type"] == "halfspace":
        return ConvexPiece.halfspace(p["a"], p["b"])
    if p["type"] == "ball":
        return ConvexPiece.ball(p["center"], p["radius"])
    return ConvexPiece.interval(p["coord"], p.get("lo"), p.get("hi"))


def build_system(pf: ProblemFile, grid: int | None = None) -> LinearSystem:
    if pf.kind == "linear_system_finite":
        return LinearSystem.finite((r["a"], r["b"]) for r in pf.payload["rows"])
    if pf.kind == "builtin" and pf.payload["name"] in ("circle-weighted", "circle-unit"):
        return fixtures.circle_system(pf.payload["name"] == "circle-weighted", grid or 4096)
    if pf.kind != "linear_system_curve":
        raise InputError(f"{pf.kind} problems do not describe a linear system")
    g = grid or pf.payload.get("grid", 4096)
    if "curve" in pf.payload:
        return fixtures.circle_system(pf.payload["curve"] == "circle-weighted", g)
    t = pf.payload["table"]
    return LinearSystem(curve=Curve.from_table(t["t"], t["a"], t["b"]), grid_size=g)


def _default_point(pf: ProblemFile, dim: int, override) -> np.ndarray:
    if override is not None:
        return as_vector(override, dim, "--point")
    if pf.base_point is not None:
        return as_vector(pf.base_point, dim, "field /base_point")
    if pf.kind in ("builtin", "linear_system_curve"):
        return np.array([1.0, 0.0]) if dim == 2 else np.zeros(dim)
    raise InputError("no base point: give base_point in the file or --point")


def build_scenario(pf: ProblemFile, point=None, tol: Tolerances = DEFAULT_TOL,
                   grid: int | None = None) -> Scenario:
    if pf.kind == "builtin":
        name = pf.payload["name"]
        if name == "disk-slab":
            raise InputError("disk-slab is a body, not a function: use the endset command")
        s = fixtures.builtin(name, grid or 4096)
        if point is not None or pf.base_point is not None:
            raise InputError("builtin scenarios have a fixed base point")
        s.tol = tol
        return s
    if pf.kind == "max_function":
        phi = build_max_function(pf)
        xbar = _default_point(pf, phi.dim, point)
        pieces = [_build_piece(p) for p in pf.payload["level_set"]] if "level_set" in pf.payload else None
        return Scenario.from_max_function(phi, xbar, pieces, tol=tol)
    if pf.kind in ("linear_system_finite", "linear_system_curve"):
        sys_ = build_system(pf, grid)
        return Scenario.from_system(sys_, _default_point(pf, sys_.dim, point), tol=tol)
    raise InputError(f"{pf.kind} problems cannot be analyzed; use the endset or minnorm command")


# -- reports ------------------------------------------------------------------
def clean(v):
    """JSON-ready copy: 12 significant digits, non-finite floats as strings."""
    if isinstance(v, dict):
        return {str(k): clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [clean(x) for x in v]
    if isinstance(v, np.ndarray):
        return clean(v.tolist())
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return float(f"{v:.12g}") + 0.0
    return v


def qty(value, provenance: str) -> dict:
    """A number (or array) with exactly one provenance flag."""
    if provenance not in ("computed", "sampled", "fixture"):
        raise ValueError(provenance)
    return {"value": value, "provenance": provenance}


class ReportDocument:
    def __init__(self, command: list[str], source: str | None = None):
        self.doc = {"command": command, "input_digest": digest(source) if source is not None else None,
                    "results": {}, "certificates": {}, "warnings": []}

    @property
    def results(self) -> dict:
        return self.doc["results"]

    @property
    def certificates(self) -> dict:
        return self.doc["certificates"]

    def warn(self, msg: str):
        if msg not in self.doc["warnings"]:
            self.doc["warnings"].append(msg)

    def to_json(self) -> str:
        return json.dumps(clean(self.doc), sort_keys=True, indent=2)

    def to_text(self) -> str:
        lines = [f"command: {' '.join(self.doc['command'])}"]
        _render(clean(self.doc["results"]), lines, "")
        if self.doc["certificates"]:
            lines.append("certificates:")
            _render(clean(self.doc["certificates"]), lines, "  ")
        for w in self.doc["warnings"]:
            lines.append(f"warning: {w}")
        return "\n".join(lines)


def _render(obj, lines, indent):
    for k in sorted(obj):
        v = obj[k]
        if isinstance(v, dict) and set(v) == {"value", "provenance"}:
            lines.append(f"{indent}{k}: {_short(v['value'])}  [{v['provenance']}]")
        elif isinstance(v, dict):
            lines.append(f"{indent}{k}:")
            _render(v, lines, indent + "  ")
        else:
            lines.append(f"{indent}{k}: {_short(v)}")


def _short(v) -> str:
    s = json.dumps(v)
    return s if len(s) <= 100 else s[:97] + "..."


def digest(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def _parse_vector(text: str) -> list[float]:
    try:
        return [float(t) for t in text.replace(" ", "").split(",") if t]
    except ValueError:
        raise InputError(f"cannot parse point {text!r}; use comma-separated numbers") from None


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("EBMOD_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise InputError(f"EBMOD_SEED must be an integer, got {env!r}") from None


def _tolerances(args, pf: ProblemFile | None) -> Tolerances:
    tol = DEFAULT_TOL
    if pf is not None and pf.tolerances:
        tol = tol.replace(**pf.tolerances)
    return tol.replace(eq_tol=args.tol_eq, active_tol=args.tol_active, lp_margin=args.tol_margin,
                       dist_tol=args.tol_dist)


def _sampling(args) -> SamplingConfig:
    kw = {"seed": _seed(args)}
    if getattr(args, "shells", None):
        parts = args.shells.split(",")
        if len(parts) != 3:
            raise InputError("--shells takes r0,beta,m")
        try:
            kw.update(r0=float(parts[0]), beta=float(parts[1]), m=int(parts[2]))
        except ValueError:
            raise InputError("--shells takes r0,beta,m (two reals and an integer)") from None
    if getattr(args, "dirs", None):
        kw["k"] = args.dirs
    return SamplingConfig(**kw)


def _face_certs(res, A: PointSet) -> dict:
    coll = res.collection
    out = {"faces": [list(f) for f in coll.labels()] if coll is not None else [],
           "exhaustive": coll.exhaustive if coll is not None else False}
    if coll is not None:
        out["witnesses"] = [{"face": list(A.expand_labels(f)), "w": c.w, "margin": c.margin}
                            for f, c in zip(coll.faces, coll.certificates)]
    if res.minnorm is not None and res.face is not None:
        out["minimizing_face"] = list(A.expand_labels(res.face))
        out["minnorm_point"] = res.minnorm.point
        out["minnorm_weights"] = {str(A.labels[i]): res.minnorm.weights[i] for i in res.face}
    return out


# -- commands -----------------------------------------------------------------
def cmd_endset(args, rep: ReportDocument, pf: ProblemFile):
    tol = _tolerances(args, pf)
    if pf.kind == "builtin" and pf.payload["name"] == "disk-slab":
        body = fixtures.disk_slab()
        res = end_set_distance(body, tol=tol)
        rep.results["end_set_distance"] = qty(res.distance, "sampled")
        rep.certificates["witness_point"] = res.witness_point
        for n in res.notes:
            rep.warn(n)
    else:
        body = build_point_set(pf)
        res = end_set_distance(body, mode=args.mode, k=args.k, seed=_seed(args), tol=tol)
        prov = "computed" if res.collection.exhaustive else "sampled"
        rep.results["end_set_distance"] = qty(res.distance, prov)
        rep.results["face_count"] = qty(len(res.collection), prov)
        rep.certificates.update(_face_certs(res, body))
        for n in res.notes:
            rep.warn(n)
    for text in args.point or []:
        x = _parse_vector(text)
        g = gauge(body, x, tol)
        rep.results.setdefault("membership", {})[text] = {
            "in_end_set": end_set_member(body, x, tol), "gauge": qty(g.value, "computed")}
    for text in args.gauge or []:
        g = gauge(body, _parse_vector(text), tol)
        rep.results.setdefault("gauge", {})[text] = {"value": g.value, "provenance": "computed",
                                                     "method": g.method}


def cmd_minnorm(args, rep: ReportDocument, pf: ProblemFile):
    A = build_point_set(pf)
    tol = _tolerances(args, pf)
    res = min_norm_point(A.points, tol)
    rep.results["distance"] = qty(res.distance, "computed")
    rep.results["point"] = qty(res.point, "computed")
    rep.certificates["weights"] = {str(A.labels[i]): w for i, w in enumerate(res.weights)}
    rep.certificates["optimality_gap"] = res.optimality_gap(A.points)


def cmd_analyze(args, rep: ReportDocument, pf: ProblemFile):
    tol = _tolerances(args, pf)
    point = _parse_vector(args.point) if args.point else None
    s = build_scenario(pf, point, tol, args.grid)
    cfg = _sampling(args)
    r = sandwich_report(s, cfg)
    prof = r.empirical
    rep.results["scenario"] = s.name
    rep.results["base_point"] = qty(s.base_point, "computed")
    rep.results["lower"] = qty(r.lower, r.lower_provenance)
    rep.results["empirical"] = qty(prof.liminf, "sampled")
    rep.results["upper"] = qty(r.upper, r.upper_provenance)
    rep.results["verdict"] = r.verdict
    rep.results["shell_profile"] = {"radii": qty(prof.radii, "sampled"),
                                    "minima": qty(prof.minima, "sampled"),
                                    "tail": prof.tail, "samples": prof.samples,
                                    "positive_samples": prof.positive}
    if r.lower_detail is not None:
        ld = r.lower_detail
        rep.results["limiting_collection"] = [list(sset) for sset in ld.collection.index_sets]
        rep.certificates["lower"] = {"index_set": list(ld.index_set) if ld.index_set else None,
                                     "direction": ld.direction,
                                     "minnorm_weights": ld.minnorm.weights if ld.minnorm else None}
    if r.upper_detail is not None and r.upper_detail.collection is not None:
        rep.certificates["upper"] = _face_certs(r.upper_detail, r.upper_detail.collection.points)
    if isinstance(s.phi, MaxFunction):
        rep.results["exposed_within_limiting"] = [
            {"face": list(face), "inside_some_limiting_set": ok}
            for face, ok in inclusion_probe(s.phi, s.base_point, cfg, tol)]
        rep.warn("exposed_within_limiting is a descriptive comparison on this input only")
    for n in r.notes:
        rep.warn(n)


def cmd_linsys(args, rep: ReportDocument, pf: ProblemFile):
    tol = _tolerances(args, pf)
    sys_ = build_system(pf, args.grid)
    point = _parse_vector(args.point) if args.point else None
    x = _default_point(pf, sys_.dim, point)
    ic = index_collection(sys_, x, tol)
    mf = modulus_formula(sys_, x, tol)
    rep.results["residual"] = qty(sys_.residual(x), "computed")
    rep.results["active_indices"] = qty(list(ic.active), "computed")
    rep.results["active_sensitivity"] = ic.sensitivity
    rep.results["index_collection"] = [list(sset) for sset in ic.sets]
    rep.results["modulus_formula"] = qty(mf.distance, "computed")
    rep.warn("modulus_formula is the exact modulus under local polyhedrality, an upper estimate otherwise")
    rep.certificates.update(_face_certs(mf, sys_.generators(ic.active)))
    if args.probe:
        p = regularity_probe(sys_, x, kind=args.probe, samples=args.samples, seed=_seed(args), tol=tol)
        entry = {"kind": p.kind, "verdict": p.verdict, "directions_tested": p.samples,
                 "radii": list(p.epsilons), "note": p.note}
        if p.verdict == "counterexample":
            entry.update(direction=qty(p.direction, "sampled"), point=qty(p.point, "sampled"),
                         residuals=qty(list(p.residuals), "computed"), rechecked=p.recheck(sys_, x, tol))
        rep.results["probe"] = entry


# -- reproduction suite ---------------------------------------------------------
@dataclass
class Check:
    group: str
    quantity: str
    expected: object
    computed: object
    tolerance: str
    passed: bool


def _close(a, b, atol=0.0, rtol=0.0) -> bool:
    return abs(a - b) <= atol + rtol * abs(b)


def paper_checks(perturb: float = 0.0) -> list[Check]:
    """Run every built-in fixture; ``perturb`` shifts computed numbers (test hook)."""
    out: list[Check] = []

    def num(group, name, expected, computed, atol=0.0, rtol=0.0):
        computed = float(computed) + perturb
        tol_txt = f"abs {atol:g}" if atol else f"rel {rtol:g}"
        out.append(Check(group, name, expected, computed, tol_txt, _close(computed, expected, atol, rtol)))

    def flag(group, name, expected, computed):
        if perturb:
            computed = not computed if isinstance(computed, bool) else computed
        out.append(Check(group, name, expected, computed, "exact", computed == expected))

    # disk-slab body: end-set membership and gauges
    body = fixtures.disk_slab()
    for x, member, g in (((0.0, 1.0), True, 1.0), ((2.0, 0.5), True, 1.0), ((0.0, 0.5), False, 0.5),
                         ((1.0, 1.0), False, 2.0 - math.sqrt(2.0))):
        flag("disk-slab", f"end_set_member{x}", member, end_set_member(body, x))
        num("disk-slab", f"gauge{x}", g, gauge(body, x).value, atol=1e-9)

    # stu-war
    s = fixtures.stu_war()
    num("stu-war", "end_set_distance({0,1})", 1.0, end_set_distance(PointSet([[0.0], [1.0]])).distance,
        atol=1e-12)
    r = sandwich_report(s)
    num("stu-war", "empirical", 1.0, r.empirical.liminf, atol=1e-6)
    flag("stu-war", "lower (fixture)", (0.0, "fixture"), (r.lower, r.lower_provenance))

    # max-quad-affine
    r = sandwich_report(fixtures.max_quad_affine())
    num("max-quad-affine", "upper", math.sqrt(2.0), r.upper, atol=1e-9)
    num("max-quad-affine", "lower", math.sqrt(2.0) / 2, r.lower, atol=1e-6)
    num("max-quad-affine", "empirical", math.sqrt(2.0) / 2, r.empirical.liminf, rtol=0.02)

    # circle-weighted
    sys_ = fixtures.circle_system(True)
    xbar = np.array([1.0, 0.0])
    act = sys_.active_indices(xbar)
    flag("circle-weighted", "|T(xbar)|", 2, len(act))
    for t_exp, t in zip((0.0, 2 * math.pi), act):
        num("circle-weighted", f"T(xbar) ~ {t_exp:.6g}", t_exp, t, atol=1e-9)
    ic = index_collection(sys_, xbar)
    sets = [tuple(round(float(t), 9) for t in sset) for sset in ic.sets]
    flag("circle-weighted", "index collection", [(round(2 * math.pi, 9),)], sets)
    num("circle-weighted", "modulus_formula", 2 * math.pi, modulus_formula(sys_, xbar).distance, atol=1e-9)
    prof = sandwich_report(fixtures.circle_scenario(True)).empirical
    flag("circle-weighted", "shell minima strictly decreasing", True,
         bool(np.all(np.diff(prof.minima) < 0)))
    flag("circle-weighted", "final shell minimum < 0.05", True, bool(prof.minima[-1] < 0.05))
    probe = regularity_probe(sys_, xbar, "lp")
    flag("circle-weighted", "probe counterexample re-verifies", True,
         probe.verdict == "counterexample" and probe.recheck(sys_, xbar))

    # circle-unit
    sys_ = fixtures.circle_system(False)
    num("circle-unit", "modulus_formula", 1.0, modulus_formula(sys_, xbar).distance, atol=1e-9)
    r = sandwich_report(fixtures.circle_scenario(False))
    num("circle-unit", "empirical", 1.0, r.empirical.liminf, rtol=0.02)
    num("circle-unit", "lower", 1.0, r.lower, atol=1e-3)
    return out


def cmd_verify_paper(args, rep: ReportDocument, pf=None) -> int:
    t0 = time.perf_counter()
    checks = paper_checks(perturb=1e-3 if args.perturb else 0.0)
    rows = [{"group": c.group, "quantity": c.quantity, "expected": c.expected, "computed": c.computed,
             "tolerance": c.tolerance, "pass": c.passed} for c in checks]
    rep.results["checks"] = rows
    rep.results["groups"] = sorted({c.group for c in checks})
    rep.results["all_pass"] = all(c.passed for c in checks)
    rep.results["digest"] = digest(json.dumps(clean(rows), sort_keys=True))
    print(f"verify-paper: {len(checks)} checks in {time.perf_counter() - t0:.1f} s", file=sys.stderr)
    return EXIT_OK if rep.results["all_pass"] else EXIT_MISMATCH


def _verify_table(rep: ReportDocument) -> str:
    rows = clean(rep.results["checks"])
    head = f"{'group':<16} {'quantity':<36} {'expected':<22} {'computed':<22} {'tolerance':<10} ok"
    lines = [head, "-" * len(head)]
    for r in rows:
        lines.append(f"{r['group']:<16} {r['quantity']:<36} {json.dumps(r['expected']):<22} "
                     f"{json.dumps(r['computed']):<22} {r['tolerance']:<10} {'PASS' if r['pass'] else 'FAIL'}")
    lines.append("all pass" if rep.results["all_pass"] else "MISMATCH")
    return "\n".join(lines)


# -- entry point ----------------------------------------------------------------
def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="machine-readable report")
    common.add_argument("--seed", type=int, default=None, help="sampling seed (default: $EBMOD_SEED or 0)")
    for name, dest in (("eq", "tol_eq"), ("active", "tol_active"), ("margin", "tol_margin"),
                       ("dist", "tol_dist")):
        common.add_argument(f"--tol-{name}", dest=dest, type=float, default=None)

    p = argparse.ArgumentParser(prog="ebmod", description="Local error bound moduli of max-type "
                                "functions and linear inequality systems.")
    sub = p.add_subparsers(dest="command", required=True)

    e = sub.add_parser("endset", parents=[common], help="exposed faces, end-set distance, gauges")
    e.add_argument("file")
    e.add_argument("--mode", choices=["enumerate", "sample", "auto"], default="auto")
    e.add_argument("--k", type=int, default=10_000, help="directions in sample mode")
    e.add_argument("--point", action="append", help="end-set membership query x1,x2,...")
    e.add_argument("--gauge", action="append", help="gauge query x1,x2,...")

    a = sub.add_parser("analyze", parents=[common], help="lower / empirical / upper sandwich")
    a.add_argument("file")
    a.add_argument("--point", help="base point x1,x2,...")
    a.add_argument("--shells", help="r0,beta,m")
    a.add_argument("--dirs", type=int, help="number of directions k")
    a.add_argument("--grid", type=int, help="grid size for curve systems")

    ls = sub.add_parser("linsys", parents=[common], help="active indices, index collection, modulus formula")
    ls.add_argument("file")
    ls.add_argument("--point", help="x1,x2,...")
    ls.add_argument("--probe", choices=["lp", "acq", "eta"])
    ls.add_argument("--samples", type=int, default=1000)
    ls.add_argument("--grid", type=int)

    m = sub.add_parser("minnorm", parents=[common], help="minimum-norm point of a point set")
    m.add_argument("file")

    v = sub.add_parser("verify-paper", parents=[common], help="reproduce every built-in fixture")
    v.add_argument("--perturb", action="store_true", help=argparse.SUPPRESS)
    return p


COMMANDS = {"endset": cmd_endset, "analyze": cmd_analyze, "linsys": cmd_linsys, "minnorm": cmd_minnorm}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    try:
        if args.command == "verify-paper":
            rep = ReportDocument(["ebmod", *argv])
            code = cmd_verify_paper(args, rep)
            print(rep.to_json() if args.json else _verify_table(rep))
            return code
        pf = load_problem(args.file)
        rep = ReportDocument(["ebmod", *argv], pf.dumps())
        COMMANDS[args.command](args, rep, pf)
        print(rep.to_json() if args.json else rep.to_text())
        return EXIT_OK
    except (InputError, CapacityError) as exc:
        print(f"ebmod: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NumericalFailure as exc:
        print(f"ebmod: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except EbmodError as exc:
        print(f"ebmod: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
