"""Empirical error bound modulus and the lower / empirical / upper sandwich.

The modulus at a boundary point xbar is the liminf of phi(x) / d(x, [phi <= 0])
as x -> xbar with phi(x) > 0.  It is estimated on shells |x - xbar| = r with
r shrinking geometrically; the estimate is the smallest ratio seen on the
last third of the shells.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .core import (DEFAULT_TOL, InputError, PointSet, SamplingConfig, Tolerances, as_vector,
                   tangent_directions, unit_directions)
from .endset import EndSetDistance, end_set_distance
from .linsys import LinearSystem, as_max_function, modulus_formula
from .linsys import level_set_distance as _system_distance
from .maxfunc import LowerEstimate, MaxFunction, gradient_scale, lower_estimate, upper_estimate
from .solvers import ConvexPiece, project_intersection


def level_set_pieces(phi: MaxFunction) -> list[ConvexPiece] | None:
    """Describe [phi <= 0] by simple pieces when every piece allows it.

    Affine pieces give halfspaces, quadratics with Q = q I (q > 0) give balls
    and quadratics with Q = 0 give halfspaces.  Returns None otherwise.
    """
    out = []
    for p in phi.pieces:
        if p.kind == "affine":
            a, b = p.a, p.b
        elif not np.any(p.Q):
            a, b = p.b, -p.c
        else:
            q = p.Q[0, 0]
            if q <= 0 or np.max(np.abs(p.Q - q * np.eye(p.dim))) > 0:
                return None
            center = -p.b / (2 * q)
            r2 = float(center @ center) - p.c / q
            if r2 <= 0:
                raise InputError("a quadratic piece has an empty or degenerate zero sublevel set")
            out.append(ConvexPiece.ball(center, math.sqrt(r2)))
            continue
        if not np.any(a):
            if -b > 0:
                raise InputError("a constant piece is positive: the level set is empty")
            continue
        out.append(ConvexPiece.halfspace(a, b))
    return out


@dataclass
class Scenario:
    """A function, its base point, and what is needed to measure d(x, [phi <= 0]).

    ``phi`` follows the max-function protocol of :mod:`ebmod.maxfunc` (or,
    for one-off builtins, just ``dim`` and ``value``).  ``distance`` is an
    optional closed form for d(x, [phi <= 0]); ``pinned`` holds transcribed
    values for quantities the package cannot compute, reported as fixtures.
    """

    name: str
    kind: str  # "max_function" | "linear_system" | "builtin"
    base_point: np.ndarray
    phi: object
    pieces: list[ConvexPiece] | None = None
    system: LinearSystem | None = None
    distance: Callable[[np.ndarray], float] | None = None
    subdiff: PointSet | None = None
    pinned: dict = field(default_factory=dict)
    extra_radii: tuple[float, ...] = ()
    tol: Tolerances = DEFAULT_TOL
    check_samples: int = 1000

    def __post_init__(self):
        self.base_point = as_vector(self.base_point, self.phi.dim, "base point")
        v = self.phi.value(self.base_point)
        if abs(v) > self.tol.active_tol:
            raise InputError(f"base point must satisfy phi(xbar) = 0 (got {v:.3g})")
        if self.pieces is not None and self.check_samples:
            bad = self._piece_disagreements()
            if bad is not None:
                raise InputError(f"level-set pieces disagree with phi at {bad.tolist()}")

    @classmethod
    def from_max_function(cls, phi: MaxFunction, xbar, pieces=None, name="max_function", **kw):
        if pieces is None:
            pieces = level_set_pieces(phi)
            if pieces is None:
                raise InputError("level-set pieces are required for this max-function")
        return cls(name, "max_function", xbar, phi, pieces=pieces, **kw)

    @classmethod
    def from_system(cls, sys: LinearSystem, xbar, name="linear_system", **kw):
        return cls(name, "linear_system", xbar, as_max_function(sys), system=sys, **kw)

    def _piece_disagreements(self):
        rng = np.random.default_rng(0)
        pts = self.base_point + rng.uniform(-1.0, 1.0, size=(self.check_samples, self.phi.dim))
        for x in pts:
            v = self.phi.value(x)
            if abs(v) <= 1e-6 * (1 + np.linalg.norm(x)):
                continue  # too close to the boundary to compare
            inside = all(p.violation(x) <= self.tol.dist_tol for p in self.pieces)
            if inside != (v <= 0):
                return x
        return None

    @property
    def dim(self) -> int:
        return self.phi.dim

    def noise_floor(self) -> float:
        """Level below which phi and d(x, [phi <= 0]) are rounding noise, relative to 1 + |x|.

        Zero when both are evaluated without cancellation (closed-form
        distances, curves with their own evaluator).
        """
        if self.distance is not None:
            return 0.0
        if self.system is not None and not self.system.is_finite and self.system.curve.evaluate is not None:
            return 0.0
        G = 1.0
        if hasattr(self.phi, "active_set"):
            G = gradient_scale(self.phi, self.base_point, self.phi.active_set(self.base_point, self.tol.active_tol))
        return 64 * np.finfo(float).eps * G

    def tangents(self) -> np.ndarray:
        """Unit tangents of the level set at xbar, from the active gradients."""
        if self.dim < 2 or not hasattr(self.phi, "active_set"):
            return np.zeros((0, self.dim))
        act = self.phi.active_set(self.base_point, self.tol.active_tol)
        grads = [self.phi.gradient(self.base_point, i) for i in act]
        grads = [g for g in grads if np.any(g)]
        return tangent_directions(np.array(grads)) if grads else np.zeros((0, self.dim))


def level_set_distance(s: Scenario, x) -> float:
    """d(x, [phi <= 0])."""
    x = as_vector(x, s.dim, "point")
    if s.phi.value(x) <= 0:
        return 0.0
    if s.distance is not None:
        return float(s.distance(x))
    if s.pieces is not None:
        return project_intersection(s.pieces, x, s.tol).distance
    if s.system is not None:
        return _system_distance(s.system, x, s.tol)[0]
    raise InputError(f"scenario {s.name!r} has no way to measure level-set distances")


@dataclass
class ShellProfile:
    radii: np.ndarray  # strictly decreasing
    minima: np.ndarray  # per-shell minimum ratio, inf when no phi > 0 sample
    liminf: float
    tail: int
    samples: int
    positive: int
    argmin: list = field(default_factory=list)  # per shell, the minimising point or None
    notes: list[str] = field(default_factory=list)

    @property
    def tail_minima(self) -> np.ndarray:
        return self.minima[-self.tail:]


def shell_radii(cfg: SamplingConfig, extra=()) -> np.ndarray:
    r = np.concatenate([cfg.radii, np.asarray(cfg.extra_radii, float), np.asarray(extra, float)])
    return np.unique(r[r > 0])[::-1]


def empirical_ebm(s: Scenario, cfg: SamplingConfig = SamplingConfig()) -> ShellProfile:
    """Smallest phi(x) / d(x, [phi <= 0]) per shell around xbar."""
    radii = shell_radii(cfg, s.extra_radii)
    dirs = unit_directions(s.dim, cfg.k, cfg.seed, extra=s.tangents())
    tail = math.ceil(len(radii) / 3)
    xbar = s.base_point
    minima = np.full(len(radii), math.inf)
    argmin: list = [None] * len(radii)
    floor = s.noise_floor()
    samples = positive = degenerate = 0
    for j, r in enumerate(radii):
        for u in dirs:
            x = xbar + r * u
            samples += 1
            v = s.phi.value(x)
            if not v > floor * (1.0 + np.linalg.norm(x)):
                continue
            d = level_set_distance(s, x)
            if not d > 0:
                degenerate += 1
                continue
            positive += 1
            ratio = v / d
            if ratio < minima[j]:
                minima[j] = ratio
                argmin[j] = x
    finite_tail = minima[-tail:][np.isfinite(minima[-tail:])]
    liminf = float(finite_tail.min()) if finite_tail.size else math.inf
    prof = ShellProfile(radii, minima, liminf, tail, samples, positive, argmin)
    if not positive:
        prof.notes.append("no samples with phi > 0: xbar is not on the active boundary "
                          "or the sampling is too coarse")
    if degenerate:
        prof.notes.append(f"{degenerate} samples had phi > 0 but zero distance and were skipped")
    return prof


def _close(a: float, b: float) -> bool:
    if math.isinf(a) or math.isinf(b):
        return a == b
    return abs(a - b) <= max(0.02 * max(abs(a), abs(b)), 1e-4)


def _leq(a: float, b: float) -> bool:
    return a <= b or _close(a, b)


@dataclass
class SandwichReport:
    """lower <= empirical <= upper, with where each number came from.

    Provenance is "computed" (exact up to tolerances), "sampled" (from shell
    or direction sampling) or "fixture" (transcribed, not computed).
    """

    scenario: str
    base_point: np.ndarray
    lower: float
    lower_provenance: str
    empirical: ShellProfile
    upper: float
    upper_provenance: str
    lower_detail: LowerEstimate | None = None
    upper_detail: EndSetDistance | None = None
    verdict: dict = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)


def _verdict(lower: float, emp: float, upper: float) -> dict:
    return {
        "lower<=empirical": _leq(lower, emp),
        "empirical<=upper": _leq(emp, upper),
        "lower<=upper": lower <= upper + 1e-6,
        "lower": "tight" if _close(lower, emp) else "strict",
        "upper": "tight" if _close(upper, emp) else "strict",
        "tolerance": "2% relative or 1e-4 absolute",
    }


def sandwich_report(s: Scenario, cfg: SamplingConfig = SamplingConfig()) -> SandwichReport:
    tol = s.tol
    xbar = s.base_point
    notes: list[str] = []
    lower_detail = None
    if "lower" in s.pinned:
        lower, lower_prov = float(s.pinned["lower"]), "fixture"
        notes.append("lower estimate transcribed: the function is outside the max-function model")
    else:
        lower_detail = lower_estimate(s.phi, xbar, cfg, tol)
        lower, lower_prov = lower_detail.distance, "sampled"
        notes.extend(lower_detail.notes)

    if s.system is not None:
        upper_detail = modulus_formula(s.system, xbar, tol)
        notes.append("upper value: exact modulus under local polyhedrality, an upper estimate otherwise")
    elif s.subdiff is not None:
        upper_detail = end_set_distance(s.subdiff, mode="auto", tol=tol)
        notes.append("upper value computed from a transcribed subdifferential")
    else:
        upper_detail = upper_estimate(s.phi, xbar, tol)
    upper = upper_detail.distance
    upper_prov = "computed" if upper_detail.collection is None or upper_detail.collection.exhaustive \
        else "sampled"

    prof = empirical_ebm(s, cfg)
    notes.extend(prof.notes)
    return SandwichReport(s.name, xbar, lower, lower_prov, prof, upper, upper_prov, lower_detail,
                          upper_detail, _verdict(lower, prof.liminf, upper), notes)


__all__ = ["Scenario", "ShellProfile", "SandwichReport", "level_set_pieces", "level_set_distance",
           "shell_radii", "empirical_ebm", "sandwich_report"]
