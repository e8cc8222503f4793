"""Acceptance criteria, one test each; every test prints a single PASS/FAIL line.

Run directly (``python3 tests/test_acceptance.py``) for the summary alone.
"""
import contextlib
import io
import json
import math
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from ebmod.cli import main as cli_main
from ebmod.core import PointSet, augment_with_origin, support
from ebmod.endset import end_set_distance, end_set_member, face_collection, gauge
from ebmod.estimator import empirical_ebm, sandwich_report
from ebmod.fixtures import circle_scenario, circle_system, disk_slab, stu_war
from ebmod.linsys import active_indices, index_collection, modulus_formula, regularity_probe
from ebmod.maxfunc import SmoothPiece
from ebmod.solvers import ConvexPiece, min_norm_point, project_intersection

sys.path.insert(0, str(Path(__file__).resolve().parent))
from oracles import grid_min_norm  # noqa: E402

ROOT = Path(__file__).resolve().parent.parent
TWO_PI = 2 * math.pi


def _timed(fn):
    t0 = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t0


def criterion_1():
    """Max of a quadratic and an affine piece, analysed from its problem file."""
    def go():
        return cli_main(["analyze", str(ROOT / "problems" / "max_quad_affine.json"), "--json"])
    buf = io.StringIO()
    with contextlib.redirect_stdout(buf):
        code, dt = _timed(go)
    res = json.loads(buf.getvalue())["results"]
    up, lo, emp = res["upper"]["value"], res["lower"]["value"], res["empirical"]["value"]
    ok = (code == 0 and abs(up - math.sqrt(2)) <= 1e-9 and abs(lo - math.sqrt(2) / 2) <= 1e-6
          and abs(emp - math.sqrt(2) / 2) <= 0.02 * math.sqrt(2) / 2 and dt < 5)
    return ok, f"upper={up:.12g} lower={lo:.9g} empirical={emp:.6g} time={dt:.2f}s"


def criterion_2():
    """Dyadic 1-D function: end set of [0, 1], empirical modulus, fixture lower value."""
    def go():
        es = end_set_distance(PointSet([[0.0], [1.0]]))
        rep = sandwich_report(stu_war())
        return es, rep
    (es, rep), dt = _timed(go)
    emp = rep.empirical.liminf
    ok = (abs(es.distance - 1) <= 1e-12 and abs(emp - 1) <= 1e-6 and rep.lower == 0.0
          and rep.lower_provenance == "fixture" and dt < 2)
    return ok, (f"es_dist={es.distance:.15g} empirical={emp:.12g} lower={rep.lower} "
                f"[{rep.lower_provenance}] time={dt:.2f}s")


def criterion_3():
    """Weighted circle system at (1, 0): not locally polyhedral."""
    def go():
        sys_ = circle_system(True, 4096)
        act = active_indices(sys_, [1.0, 0.0])
        coll = index_collection(sys_, [1.0, 0.0])
        mod = modulus_formula(sys_, [1.0, 0.0])
        prof = empirical_ebm(circle_scenario(True, 4096))
        probe = regularity_probe(sys_, [1.0, 0.0], kind="lp")
        return sys_, act, coll, mod, prof, probe
    (sys_, act, coll, mod, prof, probe), dt = _timed(go)
    minima = prof.minima
    decreasing = bool(np.all(np.diff(minima) < 0))
    ok = (len(act) == 2 and abs(act[0]) <= 1e-9 and abs(act[1] - TWO_PI) <= 1e-9
          and len(coll.sets) == 1 and len(coll.sets[0]) == 1 and abs(coll.sets[0][0] - TWO_PI) <= 1e-9
          and abs(mod.distance - TWO_PI) <= 1e-9 and decreasing and minima[-1] < 0.05
          and probe.verdict == "counterexample" and probe.recheck(sys_, [1.0, 0.0]) and dt < 10)
    return ok, (f"T={list(act)} sets={list(coll.sets)} modulus={mod.distance:.12g} "
                f"decreasing={decreasing} final={minima[-1]:.3g} probe={probe.verdict} time={dt:.2f}s")


def criterion_4():
    """Unit circle system at (1, 0)."""
    rep = sandwich_report(circle_scenario(False, 4096))
    emp = rep.empirical.liminf
    ok = abs(rep.upper - 1) <= 1e-9 and abs(emp - 1) <= 0.02 and abs(rep.lower - 1) <= 1e-3
    return ok, f"modulus={rep.upper:.12g} empirical={emp:.9g} lower={rep.lower:.9g}"


def criterion_5():
    """Disk-slab body: end-set membership through bisected gauges."""
    body = disk_slab()
    expected = {(0.0, 1.0): (True, 1.0), (2.0, 0.5): (True, 1.0),
                (0.0, 0.5): (False, 0.5), (1.0, 1.0): (False, 2 - math.sqrt(2))}
    parts, ok = [], True
    for x, (member, g_exp) in expected.items():
        g = gauge(body, x)
        m = end_set_member(body, x)
        ok &= m == member and g.method == "bisection" and abs(g.value - g_exp) <= 1e-9
        parts.append(f"{x}:{m}/{g.value:.10f}")
    return ok, " ".join(parts)


def criterion_6():
    """Wolfe minimum-norm point against a simplex-grid oracle."""
    rng = np.random.default_rng(20240601)
    worst, cert_ok = 0.0, True
    for _ in range(100):
        n, m = int(rng.integers(1, 5)), int(rng.integers(1, 7))
        P = rng.normal(size=(m, n)) * rng.uniform(0.5, 3) + rng.normal(size=n)
        res = min_norm_point(PointSet(P))
        worst = max(worst, abs(res.distance - grid_min_norm(P)))
        scale = 1 + float(np.max(np.sum(P * P, axis=1)))
        cert_ok &= (res.optimality_gap(P) >= -1e-9 * scale and abs(res.weights.sum() - 1) <= 1e-12
                    and bool(np.all(res.weights >= 0)) and np.allclose(res.weights @ P, res.point, atol=1e-12))
    return worst <= 1e-5 and cert_ok, f"100 instances, worst |wolfe - grid|={worst:.2e}, certificates={cert_ok}"


def criterion_7():
    """Exposed faces of random integer point sets."""
    rng = np.random.default_rng(777)
    bad = []
    for i in range(50):
        A = PointSet(rng.integers(-5, 6, size=(int(rng.integers(1, 7)), 2)))
        coll = face_collection(A)
        problems = coll.verify()
        for face in coll.faces:
            for _ in range(3):
                x = rng.dirichlet(np.ones(len(face))) @ A.points[list(face)]
                if abs(gauge(A, x).value - 1) > 1e-6:
                    problems.append(f"gauge at {x}")
        es = end_set_distance(A)
        if es.finite and not es.distance > 0:
            problems.append("zero end-set distance")
        if problems:
            bad.append((i, problems))
    return not bad, f"50 sets, {len(bad)} with problems" + (f": {bad[:2]}" if bad else "")


def _property_checks() -> list[str]:
    rng = np.random.default_rng(99)
    fails = []
    for _ in range(200):
        A = PointSet(rng.normal(size=(int(rng.integers(1, 7)), 3)))
        w1, w2 = rng.normal(size=3), rng.normal(size=3)
        lam = float(np.exp(rng.uniform(-3, 3)))
        s1, s2, s12 = support(A, w1)[0], support(A, w2)[0], support(A, w1 + w2)[0]
        if s12 > s1 + s2 + 1e-12 * (1 + abs(s1) + abs(s2)):
            fails.append("support sublinearity")
        if abs(support(A, lam * w1)[0] - lam * s1) > 1e-12 * (1 + abs(lam * s1)):
            fails.append("support homogeneity")
        if abs(support(augment_with_origin(A), w1)[0] - max(s1, 0.0)) > 1e-12 * (1 + abs(s1)):
            fails.append("augmented support")
    for _ in range(30):
        n = int(rng.integers(1, 5))
        M = rng.normal(size=(n, n))
        if SmoothPiece.quadratic(M + M.T, rng.normal(size=n), rng.normal()).gradient_check(8) > 1e-6:
            fails.append("gradient finite differences")
    for _ in range(20):
        pieces = [ConvexPiece.ball(rng.normal(size=2) * 0.3, 1.5)]
        for _ in range(int(rng.integers(1, 4))):
            a = rng.normal(size=2)
            pieces.append(ConvexPiece.halfspace(a, 0.5 * np.linalg.norm(a) + 0.1 * abs(rng.normal())))
        x = rng.normal(size=2) * 3
        p = project_intersection(pieces, x).point
        if not np.allclose(project_intersection(pieces, p).point, p, atol=1e-6):
            fails.append("projection idempotence")
        for y in rng.normal(size=(100, 2)):
            if all(pc.contains(y) for pc in pieces) and (x - p) @ (y - p) > 1e-6 * (1 + np.linalg.norm(x - p)):
                fails.append("variational inequality")
                break
    argv = [sys.executable, "-m", "ebmod.cli", "analyze", str(ROOT / "problems" / "max_quad_affine.json"),
            "--dirs", "64", "--seed", "3", "--json"]
    outs = {subprocess.run(argv, capture_output=True, text=True, check=False).stdout for _ in range(2)}
    if len(outs) != 1:
        fails.append("report determinism")
    return fails


def criterion_8():
    """Property checks and the end-to-end reproduction command."""
    fails = _property_checks()
    t0 = time.perf_counter()
    res = subprocess.run([sys.executable, "-m", "ebmod.cli", "verify-paper"], capture_output=True, text=True,
                         check=False)
    dt = time.perf_counter() - t0
    ok = not fails and res.returncode == 0 and dt < 60
    return ok, f"property failures={sorted(set(fails))} verify-paper exit={res.returncode} time={dt:.1f}s"


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6, criterion_7,
            criterion_8]


def _report(i: int, fn) -> bool:
    ok, detail = fn()
    print(f"criterion {i}: {'PASS' if ok else 'FAIL'}  {fn.__doc__.strip()}  {detail}")
    return ok


@pytest.mark.parametrize("index", range(1, len(CRITERIA) + 1))
def test_criterion(index, capsys):
    with capsys.disabled():
        print()
        ok = _report(index, CRITERIA[index - 1])
    assert ok


if __name__ == "__main__":
    results = [_report(i, fn) for i, fn in enumerate(CRITERIA, start=1)]
    sys.exit(0 if all(results) else 1)
