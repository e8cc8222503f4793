"""Shared types: vectors, point sets, body oracles, tolerances, support function.

Vectors are plain 1-D float ``numpy`` arrays; :func:`as_vector` is the single
validation point for them.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Hashable, Iterable, Sequence

import numpy as np


class EbmodError(Exception):
    """Base class for all errors raised by this package."""


class InputError(EbmodError, ValueError):
    """Malformed or inconsistent input (dimension mismatch, bad schema, ...)."""


class CapacityError(EbmodError):
    """The requested exact computation is too large; use a sampled mode."""


class NumericalFailure(EbmodError, RuntimeError):
    """An iterative kernel did not converge.

    ``best`` carries the best iterate reached, when there is one.
    """

    def __init__(self, message: str, best=None):
        super().__init__(message)
        self.best = best


@dataclass(frozen=True)
class Tolerances:
    eq_tol: float = 1e-9
    active_tol: float = 1e-8
    lp_margin: float = 1e-7
    dist_tol: float = 1e-6

    def __post_init__(self):
        for name in ("eq_tol", "active_tol", "lp_margin", "dist_tol"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise InputError(f"tolerance {name} must be a positive finite number, got {v!r}")
        if self.eq_tol > self.active_tol:
            raise InputError("eq_tol must not exceed active_tol")

    def replace(self, **overrides) -> "Tolerances":
        values = {k: getattr(self, k) for k in ("eq_tol", "active_tol", "lp_margin", "dist_tol")}
        values.update({k: v for k, v in overrides.items() if v is not None})
        return Tolerances(**values)


DEFAULT_TOL = Tolerances()


def as_vector(x, dim: int | None = None, name: str = "vector") -> np.ndarray:
    """Return ``x`` as a finite 1-D float array, checking ``dim`` if given."""
    v = np.array(x, dtype=float).reshape(-1) if np.ndim(x) == 0 else np.array(x, dtype=float)
    if v.ndim != 1 or v.size == 0:
        raise InputError(f"{name} must be a nonempty 1-D sequence of numbers")
    if not np.all(np.isfinite(v)):
        raise InputError(f"{name} has non-finite coordinates")
    if dim is not None and v.size != dim:
        raise InputError(f"{name} has dimension {v.size}, expected {dim}")
    v.setflags(write=False)
    return v


class PointSet:
    """Finite nonempty set of points of equal dimension.

    Exact duplicates are merged on construction. ``labels[i]`` is the label of
    the first occurrence of unique point ``i`` and ``members[i]`` lists the
    labels of every input row that collapsed onto it. Labels default to the
    input row positions.
    """

    __slots__ = ("_points", "labels", "members")

    def __init__(self, points, labels: Sequence[Hashable] | None = None):
        try:
            arr = np.array(points, dtype=float)
        except (TypeError, ValueError) as exc:
            raise InputError(f"point set is not a rectangular numeric array: {exc}") from None
        if arr.ndim == 1:
            arr = arr.reshape(-1, 1) if arr.size else arr.reshape(0, 1)
        if arr.ndim != 2 or arr.shape[0] == 0 or arr.shape[1] == 0:
            raise InputError("a point set needs at least one point of positive dimension")
        if not np.all(np.isfinite(arr)):
            raise InputError("point set has non-finite coordinates")
        if labels is None:
            labels = list(range(arr.shape[0]))
        elif len(labels) != arr.shape[0]:
            raise InputError("labels must match the number of points")

        seen: dict[bytes, int] = {}
        keep: list[int] = []
        members: list[list[Hashable]] = []
        for i, row in enumerate(arr):
            # +0.0 folds -0.0 so that exact equality matches the byte key
            key = (row + 0.0).tobytes()
            if key in seen:
                members[seen[key]].append(labels[i])
            else:
                seen[key] = len(keep)
                keep.append(i)
                members.append([labels[i]])
        pts = arr[keep].copy()
        pts.setflags(write=False)
        self._points = pts
        self.labels = tuple(labels[i] for i in keep)
        self.members = tuple(tuple(m) for m in members)

    @property
    def points(self) -> np.ndarray:
        return self._points

    @property
    def dim(self) -> int:
        return self._points.shape[1]

    def __len__(self) -> int:
        return self._points.shape[0]

    def __iter__(self):
        return iter(self._points)

    def __getitem__(self, i) -> np.ndarray:
        return self._points[i]

    def subset(self, indices: Iterable[int]) -> "PointSet":
        idx = list(indices)
        return PointSet(self._points[idx], [self.labels[i] for i in idx])

    def expand_labels(self, indices: Iterable[int]) -> tuple:
        """All original labels behind the given unique-point indices, sorted."""
        out = []
        for i in indices:
            out.extend(self.members[i])
        return tuple(sorted(out, key=_label_key))

    def __repr__(self):
        return f"PointSet({self._points.tolist()!r})"


def _label_key(v):
    return (0, v) if isinstance(v, (int, float, np.integer, np.floating)) else (1, str(v))


@dataclass(frozen=True)
class BodyOracle:
    """Compact convex body known through a membership predicate.

    ``radius_bound`` must enclose the body in the origin-centred ball.
    Convexity is the caller's promise; :meth:`spot_check` samples midpoints.
    """

    dim: int
    member: Callable[[np.ndarray], bool]
    radius_bound: float
    contains_origin: bool
    name: str = "body"
    debug: bool = field(default=False, compare=False)

    def __post_init__(self):
        if self.dim < 1:
            raise InputError("body dimension must be positive")
        if not (self.radius_bound > 0 and math.isfinite(self.radius_bound)):
            raise InputError("radius_bound must be positive and finite")
        if self.debug:
            bad = self.spot_check()
            if bad:
                raise InputError(f"body oracle failed convexity spot check: {bad}")

    def contains(self, x) -> bool:
        return bool(self.member(np.asarray(x, dtype=float)))

    def spot_check(self, pairs: int = 100, seed: int = 0, max_draws: int = 200_000) -> str | None:
        """Midpoint-convexity and radius-bound sampling; returns a message on failure."""
        rng = np.random.default_rng(seed)
        found: list[np.ndarray] = []
        draws = 0
        while len(found) < 2 * pairs and draws < max_draws:
            batch = rng.uniform(-self.radius_bound, self.radius_bound, size=(512, self.dim))
            draws += 512
            for p in batch:
                if self.contains(p):
                    if np.linalg.norm(p) > self.radius_bound * (1 + 1e-12):
                        return f"member {p.tolist()} lies outside radius_bound"
                    found.append(p)
        for a, b in zip(found[0::2], found[1::2]):
            mid = 0.5 * (a + b)
            if not self.contains(mid):
                return f"midpoint of members {a.tolist()} and {b.tolist()} is not a member"
        return None


def support(A: PointSet, w, tol: Tolerances = DEFAULT_TOL) -> tuple[float, tuple[int, ...]]:
    """Support value max_i <a_i, w> and the (tolerance-widened) argmax indices."""
    w = as_vector(w, A.dim, "direction")
    vals = A.points @ w
    value = float(vals.max())
    cut = value - tol.eq_tol * (1.0 + abs(value))
    return value, tuple(int(i) for i in np.flatnonzero(vals >= cut))


def augment_with_origin(A: PointSet) -> PointSet:
    """Generators of co(C U {0}) for C = co A."""
    zero = np.zeros((1, A.dim))
    labels = list(A.labels)
    if any(np.all(p == 0.0) for p in A.points):
        return A
    return PointSet(np.vstack([A.points, zero]), labels + ["origin"])


@dataclass(frozen=True)
class SamplingConfig:
    """Shell/direction sampling schedule shared by the sampled estimators.

    Shell ``j`` has radius ``r0 * beta**j`` for ``j < m``; ``k`` deterministic
    directions are complemented by ``k // 4`` seeded random ones.
    """

    r0: float = 1e-2
    beta: float = 0.3
    m: int = 10
    k: int = 256
    seed: int = 0
    extra_radii: tuple[float, ...] = ()

    def __post_init__(self):
        if not (self.r0 > 0 and 0 < self.beta < 1 and self.m >= 1 and self.k >= 1):
            raise InputError("sampling config needs r0 > 0, 0 < beta < 1, m >= 1, k >= 1")

    @property
    def radii(self) -> np.ndarray:
        return self.r0 * self.beta ** np.arange(self.m)

    @property
    def tail(self) -> int:
        return math.ceil(self.m / 3)


def unit_directions(dim: int, k: int, seed: int = 0, extra=()) -> np.ndarray:
    """Deterministic, roughly uniform unit directions plus seeded extras.

    In 2-D the deterministic part is ``k`` equally spaced angles (so axis and
    diagonal directions are present whenever ``k`` is a multiple of 8). In
    higher dimension it is the axes, the pairwise diagonals, then a scrambled
    Sobol sequence pushed onto the sphere.
    """
    if dim == 1:
        base = np.array([[1.0], [-1.0]])
    elif dim == 2:
        ang = 2 * np.pi * np.arange(k) / k
        base = np.column_stack([np.cos(ang), np.sin(ang)])
    else:
        eye = np.eye(dim)
        rows = [eye, -eye]
        for i in range(dim):
            for j in range(i + 1, dim):
                for si in (1, -1):
                    for sj in (1, -1):
                        v = np.zeros(dim)
                        v[i], v[j] = si, sj
                        rows.append(v[None, :] / np.sqrt(2))
        base = np.vstack(rows)
        if base.shape[0] < k:
            from scipy.stats import norm, qmc

            need = k - base.shape[0]
            sob = qmc.Sobol(dim, scramble=True, seed=12345).random_base2(max(need - 1, 1).bit_length())[:need]
            g = norm.ppf(np.clip(sob, 1e-12, 1 - 1e-12))
            base = np.vstack([base, g / np.linalg.norm(g, axis=1, keepdims=True)])
    rng = np.random.default_rng(seed)
    n_rand = max(k // 4, 1) if dim > 1 else 0
    rand = rng.standard_normal((n_rand, dim))
    rand /= np.linalg.norm(rand, axis=1, keepdims=True)
    parts = [base, rand]
    extra = np.asarray(extra, dtype=float).reshape(-1, dim) if len(extra) else np.zeros((0, dim))
    if extra.size:
        nrm = np.linalg.norm(extra, axis=1, keepdims=True)
        parts.append(extra[nrm[:, 0] > 0] / nrm[nrm[:, 0] > 0])
    return np.vstack(parts)


def tangent_directions(normals) -> np.ndarray:
    """Unit vectors orthogonal to each given normal (both signs).

    Used to seed samplers with directions that graze a level set, where
    error-bound ratios typically attain their infimum.
    """
    out = []
    for g in np.atleast_2d(np.asarray(normals, dtype=float)):
        ng = np.linalg.norm(g)
        if ng == 0 or g.size < 2:
            continue
        u = g / ng
        if g.size == 2:
            t = np.array([-u[1], u[0]])
            out.extend([t, -t])
            continue
        for e in np.eye(g.size):
            t = e - (e @ u) * u
            nt = np.linalg.norm(t)
            if nt > 1e-8:
                out.extend([t / nt, -t / nt])
    return np.array(out).reshape(-1, np.asarray(normals).shape[-1])
