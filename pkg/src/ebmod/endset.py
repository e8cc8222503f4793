"""Exposed faces with positive support, end sets, gauges.

For a finite generator set A, the end set of C = co A is the union of co A'
over the subsets A' for which some direction w gives

    <a, w> = 1  on A',     <a, w> < 1  on A \\ A',

and its distance from the origin is the least minimum-norm distance over
those faces.  Strictness is certified by margin maximisation: the LP

    maximize s  s.t.  <a, w> = 1 (a in A'),  <a, w> <= 1 - s (a not in A'),
                      |w_i| <= W,  s <= 1

is solved in coordinates scaled by max ||a||, and A' is accepted iff the
optimal margin exceeds ``lp_margin``.  The box on w keeps faces from being
"separated" by rounding noise (two generators a few ulps apart).
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .core import (DEFAULT_TOL, BodyOracle, CapacityError, InputError, PointSet, Tolerances,
                   as_vector, support, unit_directions)
from .solvers import LpProblem, MinNormResult, lp_solve, min_norm_point

ENUMERATE_LIMIT = 12
#: bound on |w_i| for certificates, in units of 1 / max ||a||
WITNESS_BOX = 1e4


@dataclass(frozen=True)
class FaceCertificate:
    w: np.ndarray
    margin: float


@dataclass
class FaceCollection:
    points: PointSet
    faces: tuple[tuple[int, ...], ...]
    certificates: tuple[FaceCertificate, ...]
    exhaustive: bool = True
    mode: str = "enumerate"

    def __len__(self):
        return len(self.faces)

    def labels(self) -> list[tuple]:
        """Faces expressed through the original labels of the generators."""
        return [self.points.expand_labels(f) for f in self.faces]

    def verify(self, tol: Tolerances = DEFAULT_TOL) -> list[str]:
        """Re-check every stored witness; returns a list of problems (empty if sound)."""
        problems = []
        P = self.points.points
        for face, cert in zip(self.faces, self.certificates):
            vals = P @ cert.w
            inside = np.zeros(len(P), dtype=bool)
            inside[list(face)] = True
            if np.any(np.abs(vals[inside] - 1.0) > tol.eq_tol):
                problems.append(f"face {face}: equality side off by {np.abs(vals[inside] - 1).max():.3g}")
            if np.any(~inside) and np.any(vals[~inside] > 1.0 - tol.lp_margin / 2):
                problems.append(f"face {face}: strict side margin {1 - vals[~inside].max():.3g}")
        return problems


def face_certificate(A: PointSet, face, tol: Tolerances = DEFAULT_TOL) -> FaceCertificate | None:
    """Margin-LP witness that ``face`` (indices into A) is a positive exposed face."""
    face = sorted(set(int(i) for i in face))
    if not face:
        return None
    if face[0] < 0 or face[-1] >= len(A):
        raise InputError(f"face indices must lie in 0..{len(A) - 1}")
    P = A.points
    scale = float(np.max(np.linalg.norm(P, axis=1)))
    if scale == 0.0:
        return None
    Q = P / scale
    n = A.dim
    inside = np.zeros(len(P), dtype=bool)
    inside[face] = True

    # cheap rejection: the equalities alone must be consistent
    Qf = Q[inside]
    w_ls, *_ = np.linalg.lstsq(Qf, np.ones(len(face)), rcond=None)
    if np.max(np.abs(Qf @ w_ls - 1.0)) > 1e-8:
        return None

    c = np.zeros(n + 1)
    c[-1] = 1.0
    A_eq = np.hstack([Qf, np.zeros((len(face), 1))])
    b_eq = np.ones(len(face))
    out = Q[~inside]
    A_ub = np.hstack([out, np.ones((len(out), 1))]) if len(out) else None
    b_ub = np.ones(len(out)) if len(out) else None
    bounds = [(-WITNESS_BOX, WITNESS_BOX)] * n + [(None, 1.0)]
    res = lp_solve(LpProblem(c, A_eq, b_eq, A_ub, b_ub, bounds), tol)
    if not res.optimal:
        return None
    s = float(res.z[-1])
    if s <= tol.lp_margin:
        return None
    return FaceCertificate(w=res.z[:n] / scale, margin=s)


def _has_consistent_equalities(Q: np.ndarray, face: tuple[int, ...]) -> bool:
    Qf = Q[list(face)]
    w, *_ = np.linalg.lstsq(Qf, np.ones(len(face)), rcond=None)
    return bool(np.max(np.abs(Qf @ w - 1.0)) <= 1e-8)


def face_collection(A: PointSet, mode: str = "enumerate", k: int = 10_000, seed: int = 0,
                    tol: Tolerances = DEFAULT_TOL) -> FaceCollection:
    """The collection of generator subsets spanning positive exposed faces.

    ``enumerate`` tests every subset (|A| <= 12) and is exact up to the margin
    certificate.  ``sample`` collects argmax faces of ``k`` directions and
    keeps only certified ones: sound, possibly incomplete.
    """
    m = len(A)
    scale = float(np.max(np.linalg.norm(A.points, axis=1)))
    faces: list[tuple[int, ...]] = []
    certs: list[FaceCertificate] = []
    if scale == 0.0:
        return FaceCollection(A, (), (), exhaustive=(mode == "enumerate"), mode=mode)

    if mode == "enumerate":
        if m > ENUMERATE_LIMIT:
            raise CapacityError(f"enumerate mode handles at most {ENUMERATE_LIMIT} generators "
                                f"(got {m}); use mode='sample'")
        Q = A.points / scale
        dead: list[frozenset] = []  # subsets whose equality system is inconsistent
        for size in range(1, m + 1):
            for face in itertools.combinations(range(m), size):
                fs = frozenset(face)
                if any(d <= fs for d in dead):
                    continue
                if not _has_consistent_equalities(Q, face):
                    dead.append(fs)
                    continue
                cert = face_certificate(A, face, tol)
                if cert is not None:
                    faces.append(face)
                    certs.append(cert)
        exhaustive = True
    elif mode == "sample":
        dirs = unit_directions(A.dim, k, seed)
        seen: set[tuple[int, ...]] = set()
        for w in dirs:
            value, arg = support(A, w, tol)
            if value <= 0 or arg in seen:
                continue
            seen.add(arg)
            cert = face_certificate(A, arg, tol)
            if cert is not None:
                faces.append(arg)
                certs.append(cert)
        exhaustive = False
    else:
        raise InputError(f"unknown face collection mode {mode!r}")

    order = sorted(range(len(faces)), key=lambda i: faces[i])
    return FaceCollection(A, tuple(faces[i] for i in order), tuple(certs[i] for i in order),
                          exhaustive=exhaustive, mode=mode)


@dataclass
class EndSetDistance:
    """d(0, es(C)) with the face and minimum-norm point that realise it."""

    distance: float
    face: tuple[int, ...] | None
    minnorm: MinNormResult | None
    collection: FaceCollection | None = None
    method: str = "faces"
    witness_point: np.ndarray | None = None
    notes: list[str] = field(default_factory=list)

    @property
    def finite(self) -> bool:
        return math.isfinite(self.distance)


def end_set_distance(body: PointSet | BodyOracle, mode: str = "enumerate", k: int = 10_000,
                     seed: int = 0, tol: Tolerances = DEFAULT_TOL) -> EndSetDistance:
    """Distance from the origin to the end set of co A (or of an oracle body).

    For point sets this is exact: the minimum over certified faces of the
    face's minimum-norm distance (``inf`` when there is no positive face).
    For oracle bodies it is the smallest ``1 / gauge(u)`` over sampled unit
    rays ``u``, i.e. an upper estimate that is tight as sampling refines.
    """
    if isinstance(body, BodyOracle):
        return _oracle_end_set_distance(body, k=min(k, 4096), seed=seed, tol=tol)
    if mode == "auto":
        mode = "enumerate" if len(body) <= ENUMERATE_LIMIT else "sample"
    coll = face_collection(body, mode=mode, k=k, seed=seed, tol=tol)
    best = EndSetDistance(math.inf, None, None, coll)
    for face in coll.faces:
        res = min_norm_point(body.points[list(face)], tol)
        if res.distance < best.distance:
            w = np.zeros(len(body))
            w[list(face)] = res.weights
            best = EndSetDistance(res.distance, face, MinNormResult(res.point, res.distance, w), coll,
                                  witness_point=res.point)
    if not coll.exhaustive:
        best.notes.append("face collection sampled: distance is an upper estimate")
    return best


def _oracle_end_set_distance(body: BodyOracle, k: int, seed: int, tol: Tolerances) -> EndSetDistance:
    best = EndSetDistance(math.inf, None, None, method="ray-sampling")
    for u in unit_directions(body.dim, k, seed):
        g = gauge(body, u, tol).value
        if 0 < g < math.inf and 1.0 / g < best.distance:
            best.distance = 1.0 / g
            best.witness_point = u / g
    best.notes.append("sampled rays: distance is an upper estimate of d(0, es(C))")
    return best


@dataclass(frozen=True)
class GaugeValue:
    value: float  # math.inf when x is outside pos C'
    method: str  # "lp" | "bisection"

    @property
    def finite(self) -> bool:
        return math.isfinite(self.value)


def gauge(body: PointSet | BodyOracle, x, tol: Tolerances = DEFAULT_TOL) -> GaugeValue:
    """Gauge of C' = co(C U {0}) at x.

    Point sets: the LP  min sum(mu)  s.t.  sum mu_i a_i = x, mu >= 0.
    Oracle bodies: doubling then bisection on t with x / t in the body.
    """
    if isinstance(body, BodyOracle):
        return _oracle_gauge(body, as_vector(x, body.dim, "query point"), tol)
    x = as_vector(x, body.dim, "query point")
    if not np.any(x):
        return GaugeValue(0.0, "lp")
    P = body.points
    m = len(P)
    res = lp_solve(LpProblem(-np.ones(m), A_eq=P.T, b_eq=x, bounds=[(0.0, None)] * m), tol)
    if res.status == "infeasible":
        return GaugeValue(math.inf, "lp")
    return GaugeValue(max(-res.value, 0.0), "lp")


def _oracle_gauge(body: BodyOracle, x: np.ndarray, tol: Tolerances) -> GaugeValue:
    nx = float(np.linalg.norm(x))
    if nx == 0.0:
        return GaugeValue(0.0, "bisection")
    cap = 1.0 / tol.eq_tol
    if body.contains_origin:
        inside = lambda t: body.contains(x / t)  # noqa: E731  monotone in t
        t = tol.eq_tol
        lo = 0.0
        while not inside(t):
            lo = t
            t *= 2.0
            if t > cap:
                return GaugeValue(math.inf, "bisection")
        hi = t
    else:
        # C' = union of s*C, s in [0, 1]: gauge is 1 / sup{mu : mu x in C}
        mus = np.linspace(0.0, body.radius_bound / nx, 257)[1:]
        hits = [mu for mu in mus if body.contains(mu * x)]
        if not hits:
            return GaugeValue(math.inf, "bisection")
        mu_in = max(hits)
        mu_out = mu_in + (mus[1] - mus[0])
        # bisection on mu over [mu_in, mu_out], converted to t = 1 / mu
        hi, lo = 1.0 / mu_in, 1.0 / mu_out
        inside = lambda t: body.contains(x / t)  # noqa: E731
    while hi - lo > tol.eq_tol * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if inside(mid):
            hi = mid
        else:
            lo = mid
    return GaugeValue(0.5 * (lo + hi), "bisection")


def end_set_member(body: PointSet | BodyOracle, x, tol: Tolerances = DEFAULT_TOL) -> bool:
    """x lies in es(C) iff the gauge of co(C U {0}) at x equals 1."""
    g = gauge(body, x, tol)
    return g.finite and abs(g.value - 1.0) <= tol.active_tol

