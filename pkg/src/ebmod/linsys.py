"""Linear inequality systems <a_t, x> <= b_t over a finite or curve index set.

The residual phi(x) = max_t <a_t, x> - b_t turns a system into a max-type
function.  Finite systems become :class:`~ebmod.maxfunc.MaxFunction`
instances; curve systems are wrapped by :class:`CurveMaxFunction`, which
speaks the same protocol to the sampled estimators (indices are t-values).
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .core import (DEFAULT_TOL, InputError, PointSet, Tolerances, as_vector, tangent_directions,
                   unit_directions)
from .endset import EndSetDistance, FaceCollection, end_set_distance, face_collection
from .maxfunc import MaxFunction, SmoothPiece
from .solvers import ConvexPiece, NumericalFailure, project_intersection

CoeffFn = Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]]


@dataclass(frozen=True)
class Curve:
    """t -> (a_t, b_t) on [t0, t1].

    ``coeff`` is vectorised: an array of m t-values gives an (m, n) array of
    a_t and an (m,) array of b_t.  Optional hooks:

    * ``evaluate(ts, x)``: a cancellation-free <a_t, x> - b_t;
    * ``hints(x)``: t-values near which local maxima are expected;
    * ``active_solver(x, tol)``: exact active t-values, or None when the
      closed form does not apply at x;
    * ``scalar(x)``: a scalar t -> value function for the refinement loop.
    """

    t0: float
    t1: float
    coeff: CoeffFn
    dim: int
    name: str = "curve"
    evaluate: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None
    hints: Callable[[np.ndarray], Sequence[float]] | None = None
    active_solver: Callable[[np.ndarray, float], list[float] | None] | None = None
    scalar: Callable[[np.ndarray], Callable[[float], float]] | None = None
    table: dict | None = None

    def __post_init__(self):
        if not (math.isfinite(self.t0) and math.isfinite(self.t1) and self.t0 < self.t1):
            raise InputError("curve index range needs finite t0 < t1")

    def values(self, ts: np.ndarray, x: np.ndarray) -> np.ndarray:
        if self.evaluate is not None:
            return self.evaluate(ts, x)
        A, b = self.coeff(ts)
        return A @ x - b

    def profile(self, x: np.ndarray) -> Callable[[float], float]:
        """t -> <a_t, x> - b_t as a scalar function (fast path for refinement)."""
        if self.scalar is not None:
            return self.scalar(x)
        return lambda t: float(self.values(np.array([t]), x)[0])

    @classmethod
    def from_table(cls, ts, A, b, name: str = "table", jump_limit: float | None = None) -> "Curve":
        """Piecewise-linear interpolation of tabulated coefficients."""
        ts = np.asarray(ts, dtype=float)
        A = np.asarray(A, dtype=float)
        b = np.asarray(b, dtype=float)
        if ts.ndim != 1 or len(ts) < 2 or np.any(np.diff(ts) <= 0):
            raise InputError("table t-values must be strictly increasing with at least two entries")
        if A.shape[0] != len(ts) or b.shape != ts.shape or A.ndim != 2:
            raise InputError("table a/b rows must match the t-values")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
            raise InputError("table has non-finite coefficients")
        steps = np.hypot(np.linalg.norm(np.diff(A, axis=0), axis=1), np.diff(b))
        scale = 1.0 + max(np.abs(A).max(), np.abs(b).max())
        limit = jump_limit if jump_limit is not None else 0.25 * scale
        if steps.max() > limit:
            i = int(np.argmax(steps))
            raise InputError(f"table coefficients jump by {steps[i]:.3g} between t={ts[i]} and "
                             f"t={ts[i + 1]}; refine the table (continuity check)")

        def coeff(t):
            t = np.atleast_1d(np.asarray(t, dtype=float))
            cols = [np.interp(t, ts, A[:, j]) for j in range(A.shape[1])]
            return np.column_stack(cols), np.interp(t, ts, b)

        return cls(float(ts[0]), float(ts[-1]), coeff, A.shape[1], name=name,
                   table={"t": ts.tolist(), "a": A.tolist(), "b": b.tolist()})


class LinearSystem:
    """Either ``rows`` (finite) or ``curve`` (one-parameter) is set."""

    def __init__(self, rows=None, curve: Curve | None = None, grid_size: int = 4096):
        if (rows is None) == (curve is None):
            raise InputError("a linear system is either finite (rows) or a curve, not both")
        self.grid_size = int(grid_size)
        if self.grid_size < 8:
            raise InputError("grid_size must be at least 8")
        self.curve = curve
        if rows is not None:
            A = np.array([as_vector(a, name="row coefficient") for a, _ in rows])
            b = np.array([float(bv) for _, bv in rows])
            if len(A) == 0 or not np.all(np.isfinite(b)):
                raise InputError("a finite system needs at least one row with finite rhs")
            if A.ndim != 2:
                raise InputError("rows have mixed dimensions")
            self.A, self.b = A, b
            self.dim = A.shape[1]
        else:
            self.A = self.b = None
            self.dim = curve.dim
            self._grid = np.linspace(curve.t0, curve.t1, self.grid_size + 1)
            self._spacing = (curve.t1 - curve.t0) / self.grid_size
        self._cache: dict[bytes, list] = {}

    @classmethod
    def finite(cls, rows) -> "LinearSystem":
        return cls(rows=list(rows))

    @property
    def is_finite(self) -> bool:
        return self.curve is None

    @property
    def spacing(self) -> float:
        return 0.0 if self.is_finite else self._spacing

    def coefficients(self, index) -> tuple[np.ndarray, float]:
        if self.is_finite:
            return self.A[int(index)], float(self.b[int(index)])
        A, b = self.curve.coeff(np.array([float(index)]))
        return A[0], float(b[0])

    # -- residual ---------------------------------------------------------
    def local_maxima(self, x) -> list[tuple[float, float]]:
        """Refined local maxima (t, value) of t -> <a_t, x> - b_t, best first.

        Grid peaks (and the curve's hints) are refined by bounded scalar
        search, skipping brackets that cannot come within a small band of
        the best value found so far.
        """
        x = as_vector(x, self.dim, "point")
        key = x.tobytes()
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        c = self.curve
        g = self._grid
        v = c.values(g, x)
        n = len(g)
        h = self._spacing
        f = c.profile(x)
        left = np.concatenate([[True], v[1:] >= v[:-1]])
        right = np.concatenate([v[:-1] >= v[1:], [True]])
        peaks = np.flatnonzero(left & right)
        peaks = peaks[np.argsort(-v[peaks], kind="stable")][:4]
        # (lo, hi, start, start value, optimistic bound on the bracket maximum)
        brackets = []
        for i in peaks:
            lo, hi = max(i - 1, 0), min(i + 1, n - 1)
            drop = v[i] - min(v[lo], v[hi])
            brackets.append((g[lo], g[hi], g[i], v[i], v[i] + 2.0 * drop))
        if c.hints is not None:
            for t in c.hints(x):
                t = min(max(float(t), c.t0), c.t1)
                lo, hi = max(t - h, c.t0), min(t + h, c.t1)
                ft = f(t)
                drop = ft - min(f(lo), f(hi))
                brackets.append((lo, hi, t, ft, ft + 2.0 * max(drop, 0.0)))
        brackets.sort(key=lambda b: -b[4])
        kept: list[tuple] = []
        for b in brackets:  # one bracket per grid cell neighbourhood
            if all(abs(b[2] - k[2]) > h for k in kept):
                kept.append(b)
        brackets = kept
        best = max(b[3] for b in brackets)
        found: list[tuple[float, float]] = []
        xatol = 1e-10 * (c.t1 - c.t0)
        for lo, hi, t_start, f_start, bound in brackets:
            if bound < best - 1e-6 * (1.0 + abs(best)):
                continue
            cand = (t_start, f_start)
            if hi > lo:
                res = minimize_scalar(lambda t: -f(t), bounds=(lo, hi), method="bounded",
                                      options={"xatol": xatol, "maxiter": 200})
                if -res.fun > cand[1]:
                    cand = (float(res.x), -float(res.fun))
            found.append(cand)
            best = max(best, cand[1])
        found.sort(key=lambda p: -p[1])
        if len(self._cache) >= 16:
            self._cache.pop(next(iter(self._cache)))
        self._cache[key] = found
        return found

    def residual(self, x) -> float:
        """phi(x) = sup_t <a_t, x> - b_t."""
        x = as_vector(x, self.dim, "point")
        if self.is_finite:
            return float(np.max(self.A @ x - self.b))
        return self.local_maxima(x)[0][1]

    def active_indices(self, x, tol: float = DEFAULT_TOL.active_tol, scale: float = 1.0,
                       use_solver: bool = True) -> tuple:
        """T(x): indices within tol * (scale + |phi|) of phi(x).

        Curve systems return cluster representatives (t-values), merging
        t's closer than two grid steps; the curve's exact solver takes
        precedence when it applies.
        """
        x = as_vector(x, self.dim, "point")
        if self.is_finite:
            vals = self.A @ x - self.b
            phi = vals.max()
            return tuple(int(i) for i in np.flatnonzero(vals >= phi - tol * (scale + abs(phi))))
        c = self.curve
        if use_solver and c.active_solver is not None:
            exact = c.active_solver(x, tol)
            if exact is not None:
                return tuple(sorted(float(t) for t in exact))
        maxima = self.local_maxima(x)
        phi = maxima[0][1]
        keep = sorted(t for t, v in maxima if v >= phi - tol * (scale + abs(phi)))
        clusters: list[list[float]] = []
        for t in keep:
            if clusters and t - clusters[-1][-1] <= 2 * self._spacing:
                clusters[-1].append(t)
            else:
                clusters.append([t])
        reps = []
        for cl in clusters:
            vals = c.values(np.array(cl), x)
            reps.append(float(cl[int(np.argmax(vals))]))
        return tuple(reps)

    def generators(self, indices) -> PointSet:
        """{a_t : t in indices} labelled by the index."""
        return PointSet([self.coefficients(i)[0] for i in indices], list(indices))

    def feasible(self, x, tol: float = DEFAULT_TOL.eq_tol) -> bool:
        return self.residual(x) <= tol

    def to_dict(self) -> dict:
        if self.is_finite:
            return {"rows": [{"a": a.tolist(), "b": float(b)} for a, b in zip(self.A, self.b)]}
        c = self.curve
        out = {"t_range": [c.t0, c.t1], "grid": self.grid_size}
        if c.table is not None:
            out["table"] = c.table
        else:
            out["curve"] = c.name
        return out


def residual(sys: LinearSystem, x) -> float:
    return sys.residual(x)


def active_indices(sys: LinearSystem, x, tol: float = DEFAULT_TOL.active_tol) -> tuple:
    return sys.active_indices(x, tol)


class CurveMaxFunction:
    """The residual of a curve system, seen as a max-type function indexed by t."""

    def __init__(self, sys: LinearSystem):
        if sys.is_finite:
            raise InputError("CurveMaxFunction wraps curve systems; use as_max_function")
        self.sys = sys
        self.dim = sys.dim

    def value(self, x) -> float:
        return self.sys.residual(x)

    __call__ = value

    def active_set(self, x, tol: float = DEFAULT_TOL.active_tol, scale: float = 1.0) -> tuple:
        return self.sys.active_indices(x, tol, scale)

    def gradient(self, x, index) -> np.ndarray:
        return self.sys.coefficients(index)[0]

    def snap(self, index, base, radius: float):
        """Replace a t-value by the base active t it converges to, if within sqrt(radius)."""
        if not base:
            return round(float(index), 12)
        nearest = min(base, key=lambda b: abs(float(index) - float(b)))
        if abs(float(index) - float(nearest)) <= math.sqrt(radius):
            return nearest
        return round(float(index), 12)


def as_max_function(sys: LinearSystem):
    """Finite systems become max-affine functions; curves are wrapped."""
    if sys.is_finite:
        return MaxFunction([SmoothPiece.affine(a, b) for a, b in zip(sys.A, sys.b)])
    return CurveMaxFunction(sys)


@dataclass
class IndexCollection:
    """The collection of index subsets T' of T(x) spanning positive exposed faces."""

    active: tuple
    sets: tuple[tuple, ...]
    faces: FaceCollection
    sensitivity: dict = field(default_factory=dict)  # T(x) at tol and at 10 tol


def index_collection(sys: LinearSystem, x, tol: Tolerances = DEFAULT_TOL) -> IndexCollection:
    x = as_vector(x, sys.dim, "point")
    act = sys.active_indices(x, tol.active_tol)
    sens = {"tol": list(act)}
    if not sys.is_finite:
        sens["10tol"] = list(sys.active_indices(x, 10 * tol.active_tol, use_solver=False))
    A = sys.generators(act)
    faces = face_collection(A, mode="enumerate", tol=tol)
    return IndexCollection(act, tuple(faces.labels()), faces, sens)


def modulus_formula(sys: LinearSystem, x, tol: Tolerances = DEFAULT_TOL) -> EndSetDistance:
    """d(0, union over T' of co{a_t : t in T'}).

    The exact error bound modulus when the system is locally polyhedral at x;
    an upper estimate otherwise.
    """
    x = as_vector(x, sys.dim, "point")
    act = sys.active_indices(x, tol.active_tol)
    return end_set_distance(sys.generators(act), mode="enumerate", tol=tol)


@dataclass
class RegularityProbe:
    kind: str
    samples: int
    epsilons: tuple[float, ...]
    verdict: str  # "no-counterexample" | "counterexample"
    point: np.ndarray | None = None
    direction: np.ndarray | None = None
    residuals: tuple[float, ...] = ()
    note: str = ""

    def recheck(self, sys: LinearSystem, xbar, tol: Tolerances = DEFAULT_TOL) -> bool:
        """Re-verify a counterexample against the raw residual."""
        if self.verdict != "counterexample":
            return True
        xbar = as_vector(xbar, sys.dim, "point")
        act = sys.active_indices(xbar, tol.active_tol)
        slope = max(float(sys.coefficients(t)[0] @ self.direction) for t in act)
        in_cone = slope <= _cone_tol(sys, act, tol) if self.kind != "acq" else slope < 0
        infeasible = all(sys.residual(xbar + e * self.direction) > tol.eq_tol for e in self.epsilons)
        return in_cone and infeasible


def _cone_tol(sys, act, tol: Tolerances) -> float:
    norms = [np.linalg.norm(sys.coefficients(t)[0]) for t in act]
    return tol.eq_tol * (1.0 + max(norms, default=0.0))


def regularity_probe(sys: LinearSystem, x, kind: str = "lp", samples: int = 1000,
                     epsilons: Sequence[float] = (1e-1, 3e-2, 1e-2), seed: int = 0,
                     tol: Tolerances = DEFAULT_TOL) -> RegularityProbe:
    """Search for a direction refuting local polyhedrality, ACQ or ETA at x.

    ``lp``/``eta``: a direction w of the cone {w : <a_t, w> <= 0, t in T(x)}
    (boundary rays included) with x + eps w infeasible for every tested eps.
    ``acq``: the same test restricted to interior cone directions, which are
    feasible directions whenever the tangent cone equals the cone.
    A "no-counterexample" verdict is not a proof.
    """
    if kind not in ("lp", "acq", "eta"):
        raise InputError(f"unknown probe kind {kind!r}")
    x = as_vector(x, sys.dim, "point")
    if sys.residual(x) > tol.active_tol:
        raise InputError("regularity probes need a feasible base point")
    eps = tuple(sorted((float(e) for e in epsilons), reverse=True))
    if not eps or any(e <= 0 for e in eps):
        raise InputError("probe radii must be positive")
    act = sys.active_indices(x, tol.active_tol)
    G = np.array([sys.coefficients(t)[0] for t in act]) if act else np.zeros((0, sys.dim))
    ctol = _cone_tol(sys, act, tol)

    dirs = unit_directions(sys.dim, samples, seed)
    if len(G):
        dirs = np.vstack([tangent_directions(G), dirs])
    tested = 0
    for w in dirs:
        slope = float(np.max(G @ w)) if len(G) else -math.inf
        if kind == "acq" and not slope < -ctol:
            continue
        if slope > ctol:
            continue
        tested += 1
        res = []
        for e in eps:
            r = sys.residual(x + e * w)
            res.append(r)
            if r <= tol.eq_tol:
                break
        else:
            return RegularityProbe(kind, tested, eps, "counterexample", x + eps[-1] * w, w, tuple(res),
                                   note="cone direction infeasible at every tested radius")
    return RegularityProbe(kind, tested, eps, "no-counterexample",
                           note=f"no counterexample in {tested} cone directions (not a proof)")


_ENUM_LIMIT = 20_000


def _project_cuts(curve: Curve, ts: np.ndarray, x: np.ndarray, tol: Tolerances,
                  eps_x: float) -> tuple[np.ndarray, float]:
    """Projection of x onto {y : <a_t, y> <= b_t, t in ts}.

    The nearest feasible point lies on the boundary of at most dim cuts, so
    every such subset S is tried: y = x - A_S' lam with (A_S A_S') lam equal
    to the residuals of S at x.  Residuals come from the curve's own
    evaluation, which keeps distances far below the data scale accurate.
    The distance is returned as ||A_S' lam||, which is not subject to the
    rounding of y.  Falls back to Dykstra when there are too many subsets.
    """
    A, _ = curve.coeff(ts)
    res_x = curve.values(ts, x)
    n = x.size
    norms = np.linalg.norm(A, axis=1)
    subsets = sum(math.comb(len(ts), k) for k in range(1, min(n, len(ts)) + 1))
    if subsets > _ENUM_LIMIT:
        b = A @ x - res_x
        res = project_intersection([ConvexPiece.halfspace(a, bi) for a, bi in zip(A, b)], x, tol)
        return res.point, res.distance
    best, best_d = None, math.inf
    for k in range(1, min(n, len(ts)) + 1):
        for S in itertools.combinations(range(len(ts)), k):
            S = list(S)
            if np.any(res_x[S] <= 0):
                continue
            AS = A[S]
            G = AS @ AS.T
            if np.linalg.cond(G) > 1e14:
                continue
            lam = np.linalg.solve(G, res_x[S])
            if np.any(lam < 0):
                continue
            step = AS.T @ lam
            d = float(np.linalg.norm(step))
            if d >= best_d:
                continue
            y = x - step
            slack = (1e-9 * d + eps_x) * norms
            if np.all(curve.values(ts, y) <= slack):
                best, best_d = y, d
    if best is None:
        b = A @ x - res_x
        res = project_intersection([ConvexPiece.halfspace(a, bi) for a, bi in zip(A, b)], x, tol)
        return res.point, res.distance
    return best, best_d


def level_set_distance(sys: LinearSystem, x, tol: Tolerances = DEFAULT_TOL,
                       max_rounds: int = 200) -> tuple[float, np.ndarray]:
    """d(x, {phi <= 0}) by projecting onto a growing set of halfspace cuts.

    Finite systems project onto all rows at once.  Curve systems start from
    the cuts of the local maxima at x and add the most violated t at the
    current projection until its halfspace violation is below 1e-6 d.
    """
    x = as_vector(x, sys.dim, "point")
    if sys.residual(x) <= 0:
        return 0.0, np.array(x)
    if sys.is_finite:
        pieces = [ConvexPiece.halfspace(a, b) for a, b in zip(sys.A, sys.b) if np.any(a)]
        res = project_intersection(pieces, x, tol)
        return res.distance, res.point
    curve = sys.curve
    # rounding allowance: a cancellation-free evaluator is accurate to the
    # representation error of the iterate, a generic one to that of A x - b
    nx = float(np.linalg.norm(x))
    eps_x = np.finfo(float).eps * (2 * nx if curve.evaluate is not None else 16 * (1 + nx))
    cuts: dict[float, float] = {}
    for t, _ in sys.local_maxima(x):
        if np.any(sys.coefficients(t)[0]):
            cuts[round(t, 14)] = t
    p = np.array(x)
    for _ in range(max_rounds):
        ts = np.array(sorted(cuts.values()))
        p, d = _project_cuts(curve, ts, x, tol, eps_x)
        t, v = sys.local_maxima(p)[0]
        a, _b = sys.coefficients(t)
        na = float(np.linalg.norm(a))
        if v <= (1e-6 * d + eps_x) * na:
            return d, p
        key = round(t, 14)
        if key in cuts or not np.any(a):
            break
        cuts[key] = t
    raise NumericalFailure("cutting-plane projection did not reach a feasible point", best=p)
