import math

import numpy as np
import pytest

from ebmod.core import InputError
from ebmod.fixtures import circle_system
from ebmod.linsys import (Curve, CurveMaxFunction, LinearSystem, active_indices, as_max_function,
                          index_collection, level_set_distance, modulus_formula, regularity_probe, residual)
from ebmod.maxfunc import upper_estimate

TWO_PI = 2 * math.pi
SQUARE = LinearSystem.finite([([1, 0], 0), ([0, 1], 0)])


@pytest.fixture(scope="module")
def weighted():
    return circle_system(True)


@pytest.fixture(scope="module")
def unit():
    return circle_system(False)


@pytest.mark.parametrize("eps", [1e-1, 1e-3, 1e-6])
def test_circle_residual_examples(unit, weighted, eps):
    assert residual(unit, [1 + eps, 0]) == pytest.approx(eps, rel=1e-9)
    assert residual(weighted, [1 + eps, 0]) == pytest.approx(TWO_PI * eps, rel=1e-9)
    assert residual(unit, [0, 0]) == pytest.approx(-1.0)


def test_finite_residual_and_active():
    assert residual(SQUARE, [0.5, -1]) == 0.5
    assert active_indices(SQUARE, [0, 0]) == (0, 1)
    assert active_indices(SQUARE, [0, -1]) == (0,)
    assert SQUARE.feasible([-1, -1]) and not SQUARE.feasible([1e-3, 0])


def test_circle_active_indices(unit, weighted):
    assert active_indices(weighted, [1, 0]) == (0.0, TWO_PI)
    assert active_indices(unit, [1, 0]) == (0.0, TWO_PI)
    t = active_indices(unit, [0, 1])
    assert t == pytest.approx((math.pi / 2,))
    # the grid path (no closed form) agrees with the closed form
    grid = unit.active_indices([1, 0], 1e-8, use_solver=False)
    assert grid[0] == pytest.approx(0.0, abs=1e-9) and grid[-1] == pytest.approx(TWO_PI, abs=1e-9)


@pytest.mark.parametrize("grid", [1024, 2048, 4096, 8192])
def test_active_index_clusters_stable_under_refinement(grid):
    sys = circle_system(False, grid)
    got = sys.active_indices([math.cos(1.0), math.sin(1.0)], 1e-8, use_solver=False)
    assert len(got) == 1 and got[0] == pytest.approx(1.0, abs=1e-8)


def test_index_collection_and_modulus(weighted, unit):
    coll = index_collection(weighted, [1, 0])
    assert coll.active == (0.0, TWO_PI)
    assert coll.sets == ((TWO_PI,),)
    assert "10tol" in coll.sensitivity
    assert modulus_formula(weighted, [1, 0]).distance == pytest.approx(TWO_PI, abs=1e-9)
    assert modulus_formula(unit, [1, 0]).distance == pytest.approx(1.0, abs=1e-9)
    sq = index_collection(SQUARE, [0, 0])
    assert sq.sets == ((0,), (0, 1), (1,))
    assert modulus_formula(SQUARE, [0, 0]).distance == pytest.approx(math.sqrt(2) / 2)


def test_finite_bridge_matches_upper_estimate():
    rng = np.random.default_rng(5)
    for _ in range(20):
        A = rng.integers(-3, 4, size=(int(rng.integers(1, 5)), 2))
        sys = LinearSystem.finite([(a, 0) for a in A])
        phi = as_max_function(sys)
        assert modulus_formula(sys, [0, 0]).distance == upper_estimate(phi, [0, 0]).distance


def test_curve_max_function_protocol(weighted):
    phi = CurveMaxFunction(weighted)
    assert phi.value([1, 0]) == pytest.approx(0.0, abs=1e-12)
    assert np.allclose(phi.gradient([1, 0], TWO_PI), [TWO_PI, 0])
    assert phi.snap(1e-4, (0.0, TWO_PI), 1e-6) == 0.0
    assert phi.snap(0.5, (0.0, TWO_PI), 1e-6) == 0.5
    with pytest.raises(InputError):
        CurveMaxFunction(SQUARE)


def test_probe_finds_counterexample_on_weighted_circle(weighted):
    probe = regularity_probe(weighted, [1, 0], kind="lp")
    assert probe.verdict == "counterexample"
    assert np.allclose(np.abs(probe.direction), [0, 1])
    assert probe.recheck(weighted, [1, 0])
    assert all(r > 1e-9 for r in probe.residuals)


def test_probe_on_polyhedral_system():
    for kind in ("lp", "acq", "eta"):
        probe = regularity_probe(SQUARE, [0, 0], kind=kind, samples=200)
        assert probe.verdict == "no-counterexample"
        assert probe.recheck(SQUARE, [0, 0])
        assert "not a proof" in probe.note


def test_acq_probe_ignores_tangent_rays(unit):
    # interior cone directions of the disk at (1, 0) are feasible
    assert regularity_probe(unit, [1, 0], kind="acq", samples=200).verdict == "no-counterexample"


def test_probe_input_checks(unit):
    with pytest.raises(InputError):
        regularity_probe(unit, [2, 0])
    with pytest.raises(InputError):
        regularity_probe(unit, [1, 0], kind="mfcq")
    with pytest.raises(InputError):
        regularity_probe(unit, [1, 0], epsilons=(0.1, -1))


def test_table_curve_matches_analytic():
    ts = np.linspace(0, TWO_PI, 2001)
    table = Curve.from_table(ts, np.column_stack([np.cos(ts), np.sin(ts)]), np.ones_like(ts))
    sys = LinearSystem(curve=table, grid_size=4000)
    for x in ([1.2, 0.3], [0.2, -0.9], [-2, 0]):
        assert residual(sys, x) == pytest.approx(np.hypot(*x) - 1, abs=2e-6)
    with pytest.raises(InputError):
        Curve.from_table([0, 1, 2], [[0, 0], [5, 5], [0, 0]], [0, 0, 0])
    with pytest.raises(InputError):
        Curve.from_table([0, 0], [[0], [0]], [0, 0])


@pytest.mark.parametrize("x", [(1.5, 0.2), (1 + 1e-6, 3e-4), (0.3, 1.9), (1.0, 2e-7), (-1.1, 0.0)])
def test_exchange_distance_matches_closed_form(unit, weighted, x):
    rho = math.hypot(*x)
    expected = max(((x[0] - 1) * (x[0] + 1) + x[1] ** 2) / (rho + 1), 0.0)
    for sys in (unit, weighted):
        d, p = level_set_distance(sys, x)
        assert d == pytest.approx(expected, rel=1e-5, abs=1e-15)
        assert math.hypot(*p) - 1 <= 2e-6 * d + 1e-15


def test_finite_level_set_distance():
    d, p = level_set_distance(SQUARE, [1, 2])
    assert d == pytest.approx(math.sqrt(5)) and np.allclose(p, [0, 0], atol=1e-7)
    assert level_set_distance(SQUARE, [-1, -1])[0] == 0.0


def test_system_constructor_checks():
    with pytest.raises(InputError):
        LinearSystem()
    with pytest.raises(InputError):
        LinearSystem.finite([])
    with pytest.raises(InputError):
        circle_system(False, grid_size=4)
