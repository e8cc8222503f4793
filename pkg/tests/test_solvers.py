import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ebmod.core import InputError, NumericalFailure, PointSet
from ebmod.solvers import ConvexPiece, LpProblem, lp_solve, min_norm_point, project_intersection

from oracles import grid_min_norm, highs


# -- linear programming -------------------------------------------------------
def test_lp_examples():
    # maximize x + y on the unit square
    res = lp_solve(LpProblem([1, 1], A_ub=[[1, 0], [0, 1]], b_ub=[1, 1], bounds=[(0, None)] * 2))
    assert res.optimal and res.value == pytest.approx(2.0) and np.allclose(res.z, [1, 1])
    assert lp_solve(LpProblem([1, 0], bounds=[(0, None), (0, None)])).status == "unbounded"
    infeasible = LpProblem([1], A_ub=[[1], [-1]], b_ub=[-1, -1])
    assert lp_solve(infeasible).status == "infeasible"
    eq = lp_solve(LpProblem([-1, -1], A_eq=[[1, 2]], b_eq=[4], bounds=[(0, None)] * 2))
    assert eq.value == pytest.approx(-2.0) and np.allclose(eq.z, [0, 2])


def test_lp_degenerate_vertex_terminates():
    # many constraints active at the optimum; Bland's rule must not cycle
    A = [[1, 1], [1, 2], [2, 1], [1, 0], [0, 1], [3, 3]]
    res = lp_solve(LpProblem([1, 1], A_ub=A, b_ub=[2, 3, 3, 1, 1, 6], bounds=[(0, None)] * 2))
    assert res.value == pytest.approx(2.0)


def test_lp_shape_checks():
    with pytest.raises(InputError):
        LpProblem([1, 1], A_ub=[[1, 1, 1]], b_ub=[1])
    with pytest.raises(InputError):
        LpProblem([])
    with pytest.raises(InputError):
        LpProblem([1], bounds=[(0, 1), (0, 1)])


@pytest.mark.parametrize("seed", range(40))
def test_lp_matches_highs(seed):
    rng = np.random.default_rng(seed)
    n, m = int(rng.integers(1, 5)), int(rng.integers(1, 7))
    c = rng.normal(size=n)
    A = rng.normal(size=(m, n))
    b = rng.normal(size=m) + 0.5
    bounds = [(float(lo), None) if rng.random() < 0.5 else (None, None) for lo in rng.normal(size=n)]
    A_eq = rng.normal(size=(1, n)) if rng.random() < 0.3 else None
    b_eq = rng.normal(size=1) if A_eq is not None else None
    ours = lp_solve(LpProblem(c, A_eq=A_eq, b_eq=b_eq, A_ub=A, b_ub=b, bounds=bounds))
    status, value, _ = highs(c, A, b, A_eq, b_eq, bounds)
    assert ours.status == status
    if status == "optimal":
        assert ours.value == pytest.approx(value, rel=1e-7, abs=1e-7)
        assert np.all(A @ ours.z <= b + 1e-8)


# -- minimum-norm point -------------------------------------------------------
@pytest.mark.parametrize("points, expected", [
    ([[1, 0], [0, 1]], math.sqrt(2) / 2),
    ([[3, 4]], 5.0),
    ([[1, 1], [-1, 1]], 1.0),
    ([[1, 0], [-1, 0], [0, 5]], 0.0),
    ([[2, 0, 0], [0, 2, 0], [0, 0, 2]], 2 / math.sqrt(3)),
])
def test_min_norm_examples(points, expected):
    res = min_norm_point(PointSet(points))
    assert res.distance == pytest.approx(expected, abs=1e-12)
    assert res.weights.sum() == pytest.approx(1.0)
    assert np.all(res.weights >= -1e-15)
    assert np.allclose(res.weights @ np.asarray(points, dtype=float), res.point)


@pytest.mark.parametrize("seed", range(30))
def test_min_norm_matches_grid_oracle(seed):
    rng = np.random.default_rng(1000 + seed)
    m, n = int(rng.integers(1, 6)), int(rng.integers(1, 4))
    P = rng.normal(size=(m, n)) + rng.normal(size=n)
    res = min_norm_point(PointSet(P))
    assert res.distance == pytest.approx(grid_min_norm(P), abs=1e-6)
    assert res.optimality_gap(P) >= -1e-9


@settings(max_examples=100, deadline=None)
@given(st.lists(st.lists(st.floats(-5, 5, allow_nan=False), min_size=2, max_size=2), min_size=1, max_size=6))
def test_min_norm_below_every_generator(pts):
    A = PointSet(pts)
    res = min_norm_point(A)
    assert res.distance <= np.linalg.norm(A.points, axis=1).min() + 1e-12
    assert res.optimality_gap(A.points) >= -1e-9 * (1 + np.abs(A.points).max() ** 2)


# -- Dykstra projection -------------------------------------------------------
def test_projection_examples():
    box = [ConvexPiece.interval(0, 0, 1), ConvexPiece.interval(1, 0, 1)]
    res = project_intersection(box, [2.0, 3.0])
    assert np.allclose(res.point, [1, 1]) and res.distance == pytest.approx(math.sqrt(5))
    ball_half = [ConvexPiece.ball([0, 0], 1), ConvexPiece.halfspace([1, 0], 0)]
    res = project_intersection(ball_half, [2.0, 0.0])
    assert np.allclose(res.point, [0, 0], atol=1e-7)
    res = project_intersection(ball_half, [-2.0, 0.0])
    assert np.allclose(res.point, [-1, 0])
    inside = project_intersection(ball_half, [-0.5, 0.1])
    assert inside.distance == 0.0 and inside.cycles == 0


def test_projection_empty_intersection_fails():
    pieces = [ConvexPiece.halfspace([1, 0], -1), ConvexPiece.halfspace([-1, 0], -1)]
    with pytest.raises(NumericalFailure):
        project_intersection(pieces, [0.0, 0.0], max_cycles=2000)


def test_piece_constructors_validate():
    with pytest.raises(InputError):
        ConvexPiece.halfspace([0, 0], 1)
    with pytest.raises(InputError):
        ConvexPiece.ball([0, 0], 0)
    with pytest.raises(InputError):
        ConvexPiece.interval(0, 2, 1)


def random_pieces(rng):
    # every random family contains the ball of radius 1/2 at the origin
    pieces = [ConvexPiece.ball(rng.normal(size=2) * 0.3, 1.5)]
    for _ in range(int(rng.integers(1, 4))):
        a = rng.normal(size=2)
        pieces.append(ConvexPiece.halfspace(a, 0.5 * np.linalg.norm(a) + abs(rng.normal()) * 0.1))
    return pieces


@pytest.mark.parametrize("seed", range(25))
def test_projection_idempotent_and_variational(seed):
    rng = np.random.default_rng(seed)
    pieces = random_pieces(rng)
    x = rng.normal(size=2) * 3
    p = project_intersection(pieces, x).point
    again = project_intersection(pieces, p).point
    assert np.allclose(again, p, atol=1e-6)
    # <x - p, y - p> <= 0 for feasible y
    ys = rng.normal(size=(400, 2)) * 2
    feasible = [y for y in ys if all(pc.contains(y) for pc in pieces)]
    assert feasible
    for y in feasible:
        assert (x - p) @ (y - p) <= 1e-6 * (1 + np.linalg.norm(x - p))


def test_piece_serialisation():
    assert ConvexPiece.halfspace([1, 2], 3).to_dict() == {"type": "halfspace", "a": [1.0, 2.0], "b": 3.0}
    assert ConvexPiece.interval(1, hi=2).to_dict() == {"type": "interval", "coord": 1, "lo": None, "hi": 2.0}
