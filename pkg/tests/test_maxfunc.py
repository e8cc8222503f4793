import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ebmod.core import InputError, SamplingConfig
from ebmod.fixtures import max_quad_affine_function
from ebmod.maxfunc import (MaxFunction, SmoothPiece, active_set, eval, exposed_collection, inclusion_probe,
                           limiting_collection, lower_estimate, subdifferential, upper_estimate)

SMALL = SamplingConfig(k=64)


def two_affine():
    return MaxFunction([SmoothPiece.affine([1, 0]), SmoothPiece.affine([0, 1])])


def test_eval_active_subdifferential_examples():
    phi = max_quad_affine_function()
    assert eval(phi, [0, 0]) == 0.0
    assert eval(phi, [1, 0]) == pytest.approx(1.5)
    assert active_set(phi, [0, 0]) == (0, 1)
    assert active_set(phi, [1, 0]) == (0,)
    assert active_set(phi, [0.2, 0.2]) == (1,)
    sub = subdifferential(phi, [0, 0])
    assert sub.points.tolist() == [[0.5, 0.5], [1.0, 1.0]]
    assert sub.labels == (0, 1)


def test_affine_offset_convention():
    p = SmoothPiece.affine([2, 0], 1)
    assert p.value(np.array([1.0, 5.0])) == 1.0
    assert p.gradient(np.array([0.0, 0.0])).tolist() == [2.0, 0.0]


def test_constructor_checks():
    with pytest.raises(InputError):
        MaxFunction([])
    with pytest.raises(InputError):
        MaxFunction([SmoothPiece.affine([1]), SmoothPiece.affine([1, 2])])
    with pytest.raises(InputError):
        SmoothPiece.quadratic([[1, 2], [0, 1]], [0, 0])
    with pytest.raises(InputError):
        SmoothPiece.quadratic([[1]], [0, 0])


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10_000))
def test_quadratic_gradient_matches_finite_differences(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 5))
    M = rng.normal(size=(n, n))
    piece = SmoothPiece.quadratic(M + M.T, rng.normal(size=n), rng.normal())
    assert piece.gradient_check(n_points=8, seed=seed) <= 1e-6
    x, h = rng.normal(size=n), 1e-5
    fd = [(piece.value(x + h * e) - piece.value(x - h * e)) / (2 * h) for e in np.eye(n)]
    assert np.allclose(fd, piece.gradient(x), rtol=1e-6, atol=1e-6)


def test_limiting_collection_examples():
    coll = limiting_collection(max_quad_affine_function(), [0, 0])
    assert coll.index_sets == ((0,), (1,))
    assert coll.base_active == (0, 1)
    assert not coll.exhaustive
    assert all(coll.provenance[s] for s in coll.index_sets)
    coll2 = limiting_collection(two_affine(), [0, 0])
    assert coll2.index_sets == ((0,), (1,), (0, 1))


def test_limiting_collection_requires_boundary_point():
    with pytest.raises(InputError):
        limiting_collection(max_quad_affine_function(), [1, 1])


@pytest.mark.parametrize("phi, lower, upper", [
    (MaxFunction([SmoothPiece.affine([3, 4])]), 5.0, 5.0),
    (two_affine(), math.sqrt(2) / 2, math.sqrt(2) / 2),
    (max_quad_affine_function(), math.sqrt(2) / 2, math.sqrt(2)),
])
def test_lower_upper_examples(phi, lower, upper):
    lo = lower_estimate(phi, [0, 0])
    up = upper_estimate(phi, [0, 0])
    assert lo.distance == pytest.approx(lower, abs=1e-9)
    assert up.distance == pytest.approx(upper, abs=1e-12)
    assert any("sampled" in n for n in lo.notes)
    assert lo.direction is not None and np.linalg.norm(lo.direction) == pytest.approx(1.0)


def test_interior_point_gives_no_limiting_sets():
    phi = MaxFunction([SmoothPiece.affine([1, 0]), SmoothPiece.affine([-1, 0])])
    # phi = |x1| vanishes only on the line x1 = 0; every shell point off that line is positive
    lo = lower_estimate(phi, [0, 0], SMALL)
    assert lo.collection.index_sets == ((0,), (1,))
    flat = MaxFunction([SmoothPiece.affine([1, 0], 1)])
    with pytest.raises(InputError):
        lower_estimate(flat, [0, 0])


def random_polyhedral(rng):
    m = int(rng.integers(1, 5))
    return MaxFunction([SmoothPiece.affine(rng.integers(-3, 4, size=2)) for _ in range(m)])


@pytest.mark.parametrize("seed", range(12))
def test_polyhedral_collections_are_exposed_faces(seed):
    rng = np.random.default_rng(seed)
    phi = random_polyhedral(rng)
    coll = limiting_collection(phi, [0, 0], SMALL)
    faces = {tuple(f) for f in exposed_collection(phi, [0, 0]).labels()}
    base = set(coll.base_active)
    for s in coll.index_sets:
        assert set(s) <= base
        assert s in faces
    lo = lower_estimate(phi, [0, 0], SMALL)
    up = upper_estimate(phi, [0, 0])
    if coll.index_sets:
        assert lo.distance >= up.distance - 1e-12
        up_labels = up.collection.points.expand_labels(up.face)
        if up_labels in coll.index_sets:
            assert lo.distance == pytest.approx(up.distance, abs=1e-12)


@pytest.mark.parametrize("factor", [2.0, 0.5, 10.0])
def test_scale_invariance(factor):
    phi = max_quad_affine_function()
    scaled = phi.scaled(factor)
    a = limiting_collection(phi, [0, 0], SMALL)
    b = limiting_collection(scaled, [0, 0], SMALL)
    assert a.index_sets == b.index_sets
    assert lower_estimate(scaled, [0, 0], SMALL).distance == pytest.approx(
        factor * lower_estimate(phi, [0, 0], SMALL).distance, rel=1e-9)
    assert upper_estimate(scaled, [0, 0]).distance == pytest.approx(factor * math.sqrt(2), rel=1e-12)


def test_inclusion_probe_is_descriptive():
    rows = inclusion_probe(max_quad_affine_function(), [0, 0], SMALL)
    assert rows == [((1,), True)]
