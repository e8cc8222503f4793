"""Pointwise maxima of finitely many smooth pieces.

phi(x) = max_i f_i(x) with affine or quadratic f_i.  Provides active sets and
subdifferentials, the sampled collection of limiting active sets at a
boundary point, and the two error-bound estimates built from them:

* lower: min over limiting active sets Y' of d(0, co{grad f_y(xbar) : y in Y'})
* upper: d(0, es(subdifferential at xbar)) via the exposed-face collection.

The sampled routines accept any object with the small protocol implemented
by :class:`MaxFunction` (``dim``, ``value``, ``active_set``, ``gradient``,
``snap``); :mod:`ebmod.linsys` supplies one for curve-indexed systems.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Hashable, Sequence

import numpy as np

from .core import (DEFAULT_TOL, InputError, PointSet, SamplingConfig, Tolerances, as_vector,
                   tangent_directions, unit_directions)
from .endset import EndSetDistance, FaceCollection, end_set_distance, face_collection
from .solvers import MinNormResult, min_norm_point


@dataclass(frozen=True)
class SmoothPiece:
    """Affine ``<a, x> - b`` or quadratic ``x'Qx + <b, x> + c`` piece."""

    kind: str
    a: np.ndarray | None = None
    b: float | np.ndarray = 0.0
    Q: np.ndarray | None = None
    c: float = 0.0

    @classmethod
    def affine(cls, a, b=0.0) -> "SmoothPiece":
        return cls("affine", a=as_vector(a, name="affine coefficient"), b=float(b))

    @classmethod
    def quadratic(cls, Q, b, c=0.0) -> "SmoothPiece":
        Q = np.array(Q, dtype=float)
        bv = as_vector(b, name="quadratic linear term")
        if Q.shape != (bv.size, bv.size) or not np.all(np.isfinite(Q)):
            raise InputError("quadratic piece needs a finite square Q matching b")
        if np.max(np.abs(Q - Q.T)) > 1e-12 * (1 + np.max(np.abs(Q))):
            raise InputError("quadratic piece needs a symmetric Q")
        Q.setflags(write=False)
        piece = cls("quadratic", Q=Q, b=bv, c=float(c))
        err = piece.gradient_check()
        if err > 1e-5:
            raise InputError(f"quadratic piece gradient check failed (rel. err {err:.2e})")
        return piece

    @property
    def dim(self) -> int:
        return self.a.size if self.kind == "affine" else self.b.size

    def value(self, x: np.ndarray) -> float:
        if self.kind == "affine":
            return float(self.a @ x - self.b)
        return float(x @ self.Q @ x + self.b @ x + self.c)

    def gradient(self, x: np.ndarray) -> np.ndarray:
        if self.kind == "affine":
            return np.array(self.a)
        return 2.0 * self.Q @ x + self.b

    def scaled(self, factor: float) -> "SmoothPiece":
        if self.kind == "affine":
            return SmoothPiece("affine", a=factor * self.a, b=factor * self.b)
        Q = factor * self.Q
        Q.setflags(write=False)
        return SmoothPiece("quadratic", Q=Q, b=factor * self.b, c=factor * self.c)

    def gradient_check(self, n_points: int = 5, seed: int = 0) -> float:
        """Worst relative error of the analytic gradient against central differences."""
        rng = np.random.default_rng(seed)
        worst = 0.0
        for x in rng.standard_normal((n_points, self.dim)):
            h = 1e-6 * (1 + np.linalg.norm(x))
            fd = np.array([(self.value(x + h * e) - self.value(x - h * e)) / (2 * h)
                           for e in np.eye(self.dim)])
            g = self.gradient(x)
            worst = max(worst, float(np.linalg.norm(fd - g) / max(1.0, np.linalg.norm(g))))
        return worst

    def to_dict(self) -> dict:
        if self.kind == "affine":
            return {"type": "affine", "a": self.a.tolist(), "b": self.b}
        return {"type": "quadratic", "Q": self.Q.tolist(), "b": self.b.tolist(), "c": self.c}


class MaxFunction:
    """phi(x) = max over pieces; piece indices are 0-based."""

    def __init__(self, pieces: Sequence[SmoothPiece]):
        pieces = tuple(pieces)
        if not pieces:
            raise InputError("a max-function needs at least one piece")
        dims = {p.dim for p in pieces}
        if len(dims) != 1:
            raise InputError(f"pieces have mixed dimensions {sorted(dims)}")
        self.pieces = pieces
        self.dim = dims.pop()

    def __len__(self):
        return len(self.pieces)

    def values(self, x) -> np.ndarray:
        x = as_vector(x, self.dim, "point")
        return np.array([p.value(x) for p in self.pieces])

    def value(self, x) -> float:
        return float(self.values(x).max())

    __call__ = value

    def active_set(self, x, tol: float = DEFAULT_TOL.active_tol, scale: float = 1.0) -> tuple[int, ...]:
        """Indices with f_i(x) >= phi(x) - tol * (scale + |phi(x)|)."""
        v = self.values(x)
        phi = v.max()
        return tuple(int(i) for i in np.flatnonzero(v >= phi - tol * (scale + abs(phi))))

    def gradient(self, x, index: int) -> np.ndarray:
        return self.pieces[index].gradient(as_vector(x, self.dim, "point"))

    def snap(self, index: Hashable, base: Sequence[Hashable], radius: float) -> Hashable:
        return index

    def subdifferential(self, x, tol: float = DEFAULT_TOL.active_tol) -> PointSet:
        """Gradients of the active pieces; labels are piece indices."""
        act = self.active_set(x, tol)
        return PointSet([self.gradient(x, i) for i in act], list(act))

    def scaled(self, factor: float) -> "MaxFunction":
        return MaxFunction([p.scaled(factor) for p in self.pieces])


def eval(phi: MaxFunction, x) -> float:  # noqa: A001  mirrors the operation name
    return phi.value(x)


def active_set(phi: MaxFunction, x, tol: float = DEFAULT_TOL.active_tol) -> tuple[int, ...]:
    return phi.active_set(x, tol)


def subdifferential(phi, x, tol: Tolerances = DEFAULT_TOL) -> PointSet:
    """Generators of the Clarke subdifferential co{grad f_y(x) : y active}."""
    act = phi.active_set(x, tol.active_tol)
    return PointSet([phi.gradient(x, i) for i in act], list(act))



@dataclass
class LimitingCollection:
    """Index sets recurring as active sets along shells shrinking to xbar.

    Sampled, so never exhaustive; ``provenance`` maps each set to the radii
    at which it was observed in the persistence window.
    """

    index_sets: tuple[tuple, ...]
    provenance: dict
    base_active: tuple
    exhaustive: bool = False
    samples: int = 0
    positive_samples: int = 0


def _check_boundary(phi, xbar: np.ndarray, tol: Tolerances) -> None:
    v = phi.value(xbar)
    if abs(v) > tol.active_tol:
        raise InputError(f"base point must lie on the zero level of phi (phi(xbar) = {v:.3g})")


def gradient_scale(phi, xbar, base) -> float:
    return max((float(np.linalg.norm(phi.gradient(xbar, i))) for i in base), default=1.0) or 1.0


def limiting_collection(phi, xbar, cfg: SamplingConfig = SamplingConfig(),
                        tol: Tolerances = DEFAULT_TOL) -> LimitingCollection:
    """Sampled approximation of the limiting active-set collection at ``xbar``.

    Points ``xbar + r u`` are visited on shells ``r = r0 beta^j`` along unit
    directions ``u``.  Along each direction the active set is recorded when
    phi > active_tol * r * G; a set enters the collection when it is the same on every shell
    of the last ``ceil(m/3)`` shells.  Active sets use the shell-relative
    tolerance ``active_tol * (|phi| + r G)`` with G the largest active
    gradient norm at ``xbar``, so rescaling phi leaves the sets unchanged.
    """
    xbar = as_vector(xbar, phi.dim, "base point")
    _check_boundary(phi, xbar, tol)
    base = tuple(phi.active_set(xbar, tol.active_tol))
    G = gradient_scale(phi, xbar, base)
    grads = np.array([phi.gradient(xbar, i) for i in base])
    dirs = unit_directions(phi.dim, cfg.k, cfg.seed, extra=tangent_directions(grads))
    radii = cfg.radii
    window = cfg.tail

    found: dict[tuple, list[float]] = {}
    samples = positive = 0
    for u in dirs:
        trail: list[tuple | None] = []
        for r in radii:
            x = xbar + r * u
            samples += 1
            v = phi.value(x)
            # phi within the active tolerance of zero is on the level set
            if not v > tol.active_tol * r * G:
                trail.append(None)
                continue
            positive += 1
            act = phi.active_set(x, tol.active_tol, scale=r * G)
            trail.append(tuple(sorted({phi.snap(i, base, r) for i in act}, key=_key)))
        tail = trail[-window:]
        if tail[0] is not None and all(t == tail[0] for t in tail):
            found.setdefault(tail[0], []).extend(float(r) for r in radii[-window:])

    sets = tuple(sorted(found, key=lambda s: (len(s), [_key(v) for v in s])))
    prov = {s: sorted(set(found[s]), reverse=True) for s in sets}
    return LimitingCollection(sets, prov, base, samples=samples, positive_samples=positive)


def _key(v):
    return (0, float(v)) if isinstance(v, (int, float, np.integer, np.floating)) else (1, str(v))


@dataclass
class LowerEstimate:
    distance: float
    index_set: tuple | None
    minnorm: MinNormResult | None
    collection: LimitingCollection
    direction: np.ndarray | None = None  # unit u with <grad, u> >= distance on the index set
    exhaustive: bool = False
    notes: list[str] = field(default_factory=list)


def lower_estimate(phi, xbar, cfg: SamplingConfig = SamplingConfig(),
                   tol: Tolerances = DEFAULT_TOL) -> LowerEstimate:
    """min over sampled limiting sets of d(0, co gradients at xbar)."""
    xbar = as_vector(xbar, phi.dim, "base point")
    coll = limiting_collection(phi, xbar, cfg, tol)
    best = LowerEstimate(math.inf, None, None, coll)
    for s in coll.index_sets:
        res = min_norm_point(np.array([phi.gradient(xbar, i) for i in s]), tol)
        if res.distance < best.distance:
            best.distance, best.index_set, best.minnorm = res.distance, s, res
    if best.minnorm is not None and best.distance > 0:
        best.direction = best.minnorm.point / best.distance
    if not coll.index_sets:
        best.notes.append("no positive-phi samples persisted: xbar may be interior to the level set "
                          "or the sampling is too coarse")
    best.notes.append("computed from a sampled (non-exhaustive) limiting collection")
    return best


def exposed_collection(phi, xbar, tol: Tolerances = DEFAULT_TOL, mode: str = "auto") -> FaceCollection:
    """Faces of the subdifferential exposed by directions with positive support."""
    A = subdifferential(phi, as_vector(xbar, phi.dim, "base point"), tol)
    if mode == "auto":
        mode = "enumerate" if len(A) <= 12 else "sample"
    return face_collection(A, mode=mode, tol=tol)


def upper_estimate(phi, xbar, tol: Tolerances = DEFAULT_TOL, mode: str = "auto") -> EndSetDistance:
    """d(0, es(subdifferential at xbar))."""
    A = subdifferential(phi, as_vector(xbar, phi.dim, "base point"), tol)
    return end_set_distance(A, mode=mode, tol=tol)


def inclusion_probe(phi, xbar, cfg: SamplingConfig = SamplingConfig(),
                    tol: Tolerances = DEFAULT_TOL) -> list[tuple[tuple, bool]]:
    """For each exposed face, whether its index set lies inside some sampled limiting set.

    A descriptive comparison of the two outer limiting sets on a fixture;
    it makes no claim about the general inclusion question.
    """
    faces = exposed_collection(phi, xbar, tol)
    coll = limiting_collection(phi, xbar, cfg, tol)
    out = []
    for labels in faces.labels():
        covered = any(set(labels) <= set(s) for s in coll.index_sets)
        out.append((labels, covered))
    return out
