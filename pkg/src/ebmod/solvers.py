"""Numerical kernels: dense simplex LP, Wolfe minimum-norm point, Dykstra projection."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import DEFAULT_TOL, InputError, NumericalFailure, PointSet, Tolerances, as_vector

# ---------------------------------------------------------------------------
# Linear programming
# ---------------------------------------------------------------------------


@dataclass
class LpProblem:
    """maximize <c, z> s.t. A_eq z = b_eq, A_ub z <= b_ub, lo_j <= z_j <= hi_j.

    ``bounds`` holds one ``(lo, hi)`` pair per variable, ``None`` meaning
    unbounded on that side; omitted bounds default to free variables.
    """

    c: np.ndarray
    A_eq: np.ndarray | None = None
    b_eq: np.ndarray | None = None
    A_ub: np.ndarray | None = None
    b_ub: np.ndarray | None = None
    bounds: Sequence[tuple[float | None, float | None]] | None = None

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float).reshape(-1)
        n = self.c.size
        if n == 0:
            raise InputError("LP needs at least one variable")

        def rows(A, b, what):
            if A is None or len(A) == 0:
                return np.zeros((0, n)), np.zeros(0)
            A = np.atleast_2d(np.asarray(A, dtype=float))
            b = np.asarray(b, dtype=float).reshape(-1)
            if A.shape != (b.size, n):
                raise InputError(f"{what} constraint matrix has shape {A.shape}, expected ({b.size}, {n})")
            return A, b

        self.A_eq, self.b_eq = rows(self.A_eq, self.b_eq, "equality")
        self.A_ub, self.b_ub = rows(self.A_ub, self.b_ub, "inequality")
        if self.bounds is None:
            self.bounds = [(None, None)] * n
        if len(self.bounds) != n:
            raise InputError("bounds must list one (lo, hi) pair per variable")
        for arr in (self.c, self.A_eq, self.b_eq, self.A_ub, self.b_ub):
            if not np.all(np.isfinite(arr)):
                raise InputError("LP coefficients must be finite")

    @property
    def n(self) -> int:
        return self.c.size


@dataclass
class LpResult:
    status: str  # "optimal" | "infeasible" | "unbounded"
    z: np.ndarray | None = None
    value: float | None = None
    iterations: int = 0

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


class _Tableau:
    """Dense tableau for max c'y, A y = b (b >= 0), y >= 0 with Bland pivoting."""

    def __init__(self, A, b, basis, piv_tol, max_iter):
        self.T = np.hstack([A, b[:, None]]).astype(float)
        self.basis = list(basis)
        self.piv_tol = piv_tol
        self.max_iter = max_iter
        self.iterations = 0

    def pivot(self, r, j):
        T = self.T
        T[r] /= T[r, j]
        col = T[:, j].copy()
        col[r] = 0.0
        T -= np.outer(col, T[r])
        self.basis[r] = j

    def run(self, cost, allowed):
        """Maximise ``cost`` over the current basis; True if optimal, False if unbounded."""
        T = self.T
        m = T.shape[0]
        while True:
            cb = cost[self.basis]
            reduced = cost - cb @ T[:, :-1]
            scale = 1.0 + np.abs(cost).max()
            cand = [j for j in allowed if reduced[j] > self.piv_tol * scale and j not in self.basis]
            if not cand:
                return True
            j = min(cand)  # Bland: smallest entering index
            colj = T[:, j]
            best_r, best_ratio = -1, np.inf
            for r in range(m):
                if colj[r] > self.piv_tol:
                    ratio = T[r, -1] / colj[r]
                    if best_r < 0:
                        best_r, best_ratio = r, ratio
                        continue
                    slack = 1e-12 * (1 + abs(best_ratio))
                    # ties go to the smallest basic index (Bland)
                    if ratio < best_ratio - slack or (
                        ratio <= best_ratio + slack and self.basis[r] < self.basis[best_r]
                    ):
                        best_r, best_ratio = r, ratio
            if best_r < 0:
                return False
            self.pivot(best_r, j)
            self.iterations += 1
            if self.iterations > self.max_iter:
                raise NumericalFailure("simplex iteration cap exceeded", best=self.solution(T.shape[1] - 1))

    def solution(self, ncols):
        y = np.zeros(ncols)
        for r, j in enumerate(self.basis):
            y[j] = self.T[r, -1]
        return y


def lp_solve(p: LpProblem, tol: Tolerances = DEFAULT_TOL, max_iter: int | None = None) -> LpResult:
    """Solve a small dense LP by the two-phase simplex method with Bland's rule."""
    n = p.n
    # z = z0 + M y with y >= 0; extra rows y_j <= hi_j - lo_j for doubly bounded vars
    cols: list[np.ndarray] = []
    z0 = np.zeros(n)
    box_rows: list[tuple[int, float]] = []
    for j, (lo, hi) in enumerate(p.bounds):
        lo = None if lo is None or lo == -np.inf else float(lo)
        hi = None if hi is None or hi == np.inf else float(hi)
        e = np.zeros(n)
        e[j] = 1.0
        if lo is not None:
            if hi is not None and hi < lo:
                return LpResult("infeasible")
            z0[j] = lo
            cols.append(e)
            if hi is not None:
                box_rows.append((len(cols) - 1, hi - lo))
        elif hi is not None:
            z0[j] = hi
            cols.append(-e)
        else:
            cols.append(e)
            cols.append(-e)
    M = np.column_stack(cols)
    ny = M.shape[1]

    Aeq = p.A_eq @ M
    beq = p.b_eq - p.A_eq @ z0
    Aub = p.A_ub @ M
    bub = p.b_ub - p.A_ub @ z0
    if box_rows:
        extra = np.zeros((len(box_rows), ny))
        for r, (j, ub) in enumerate(box_rows):
            extra[r, j] = 1.0
        Aub = np.vstack([Aub, extra])
        bub = np.concatenate([bub, [ub for _, ub in box_rows]])

    m_eq, m_ub = Aeq.shape[0], Aub.shape[0]
    m = m_eq + m_ub
    nvar = ny + m_ub  # structural + slacks
    A = np.zeros((m, nvar))
    b = np.zeros(m)
    A[:m_eq, :ny] = Aeq
    b[:m_eq] = beq
    A[m_eq:, :ny] = Aub
    A[m_eq:, ny:] = np.eye(m_ub)
    b[m_eq:] = bub
    neg = b < 0
    A[neg] *= -1
    b[neg] *= -1

    # slack columns can start basic on rows that were not flipped
    basis: list[int] = []
    art_rows: list[int] = []
    for r in range(m):
        if r >= m_eq and not neg[r]:
            basis.append(ny + (r - m_eq))
        else:
            basis.append(-1)
            art_rows.append(r)
    n_art = len(art_rows)
    A_full = np.hstack([A, np.zeros((m, n_art))])
    for k, r in enumerate(art_rows):
        A_full[r, nvar + k] = 1.0
        basis[r] = nvar + k

    if max_iter is None:
        max_iter = 50 * (m + nvar) + 1000
    piv_tol = 1e-11
    tab = _Tableau(A_full, b, basis, piv_tol, max_iter)
    allowed_all = list(range(nvar + n_art))
    if n_art:
        cost1 = np.zeros(nvar + n_art)
        cost1[nvar:] = -1.0
        tab.run(cost1, allowed_all)
        infeas = -cost1[tab.basis] @ tab.T[:, -1]
        if infeas > tol.eq_tol * (1.0 + np.abs(b).max(initial=0.0)):
            return LpResult("infeasible", iterations=tab.iterations)
        # drive artificials out of the basis; drop redundant rows
        keep_rows = []
        for r in range(m):
            if tab.basis[r] >= nvar:
                row = tab.T[r, :nvar]
                js = np.flatnonzero(np.abs(row) > 1e-9)
                if js.size:
                    tab.pivot(r, int(js[0]))
                    keep_rows.append(r)
            else:
                keep_rows.append(r)
        tab.T = np.hstack([tab.T[keep_rows, :nvar], tab.T[keep_rows, -1:]])
        tab.basis = [tab.basis[r] for r in keep_rows]
        tab.T[:, -1] = np.maximum(tab.T[:, -1], 0.0)

    cost2 = np.concatenate([M.T @ p.c, np.zeros(m_ub)])
    bounded = tab.run(cost2, list(range(nvar)))
    if not bounded:
        return LpResult("unbounded", iterations=tab.iterations)
    y = tab.solution(nvar)[:ny]
    z = z0 + M @ y
    return LpResult("optimal", z=z, value=float(p.c @ z), iterations=tab.iterations)


# ---------------------------------------------------------------------------
# Minimum-norm point (Wolfe)
# ---------------------------------------------------------------------------


@dataclass
class MinNormResult:
    point: np.ndarray
    distance: float
    weights: np.ndarray  # over the rows of the input PointSet

    def optimality_gap(self, points: np.ndarray) -> float:
        """min_i <x, a_i - x>; nonnegative (up to rounding) at the optimum."""
        return float((points @ self.point - self.point @ self.point).min())


def _affine_min(P: np.ndarray) -> np.ndarray:
    """Weights (summing to 1) of the minimum-norm point of the affine hull of rows of P."""
    k = P.shape[0]
    G = P @ P.T
    K = np.zeros((k + 1, k + 1))
    K[:k, :k] = G
    K[:k, k] = 1.0
    K[k, :k] = 1.0
    rhs = np.zeros(k + 1)
    rhs[k] = 1.0
    sol = np.linalg.lstsq(K, rhs, rcond=None)[0]
    alpha = sol[:k]
    return alpha / alpha.sum()


def min_norm_point(A: PointSet | np.ndarray, tol: Tolerances = DEFAULT_TOL, max_iter: int = 1000) -> MinNormResult:
    """Nearest point of co A to the origin by Wolfe's algorithm.

    Terminates when ``<x, a_i - x> >= -eps`` for all generators (Wolfe's
    criterion, with ``eps`` at the rounding level of the data); the result is
    then certified against ``dist_tol``.
    """
    P = A.points if isinstance(A, PointSet) else np.atleast_2d(np.asarray(A, dtype=float))
    m = P.shape[0]
    if m == 0:
        raise InputError("min_norm_point needs a nonempty point set")
    scale = float(np.max(np.sum(P * P, axis=1)))
    eps = 1e-13 * max(scale, 1e-300)
    zero = 1e-28 * max(scale, 1e-300)  # ||x|| <= 1e-14 max ||a||: x is the origin

    i0 = int(np.argmin(np.sum(P * P, axis=1)))
    S = [i0]
    lam = np.array([1.0])
    x = P[i0].copy()

    def weights_full():
        w = np.zeros(m)
        w[S] = lam
        return w

    for _ in range(max_iter):
        xx = x @ x
        if xx <= zero:
            break
        vals = P @ x
        j = int(np.argmin(vals))
        if vals[j] >= xx - eps or j in S:
            break
        S.append(j)
        lam = np.append(lam, 0.0)
        for _minor in range(m + 2):
            alpha = _affine_min(P[S])
            if np.all(alpha > 1e-14):
                lam = alpha
                x = lam @ P[S]
                break
            # move toward the affine minimiser until a weight hits zero
            dec = alpha <= 1e-14
            denom = lam[dec] - alpha[dec]
            with np.errstate(divide="ignore", invalid="ignore"):
                ratios = np.where(denom > 0, lam[dec] / denom, np.inf)
            theta = min(1.0, float(ratios.min()))
            lam = theta * alpha + (1 - theta) * lam
            keep = lam > 1e-14
            S = [s for s, k in zip(S, keep) if k]
            lam = lam[keep]
            lam = lam / lam.sum()
            x = lam @ P[S]
        else:
            raise NumericalFailure("Wolfe minor cycle did not settle",
                                   best=MinNormResult(x, float(np.linalg.norm(x)), weights_full()))
    else:
        raise NumericalFailure("Wolfe iteration cap exceeded",
                               best=MinNormResult(x, float(np.linalg.norm(x)), weights_full()))

    res = MinNormResult(point=x, distance=float(np.linalg.norm(x)), weights=weights_full())
    if res.optimality_gap(P) < -tol.dist_tol:
        raise NumericalFailure("Wolfe optimality certificate failed", best=res)
    return res


# ---------------------------------------------------------------------------
# Projection onto intersections (Dykstra)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConvexPiece:
    """Simple closed convex set with a closed-form projection.

    kind ``halfspace``: {x : <a, x> <= b}; ``ball``: {x : ||x - c|| <= r};
    ``interval``: {x : lo <= x[coord] <= hi} (either bound may be None).
    """

    kind: str
    a: tuple = ()
    b: float = 0.0
    center: tuple = ()
    radius: float = 0.0
    coord: int = 0
    lo: float | None = None
    hi: float | None = None

    @classmethod
    def halfspace(cls, a, b) -> "ConvexPiece":
        a = as_vector(a, name="halfspace normal")
        if np.linalg.norm(a) == 0:
            raise InputError("halfspace normal must be nonzero")
        return cls("halfspace", a=tuple(a.tolist()), b=float(b))

    @classmethod
    def ball(cls, center, radius) -> "ConvexPiece":
        if not radius > 0:
            raise InputError("ball radius must be positive")
        return cls("ball", center=tuple(as_vector(center, name="ball centre").tolist()), radius=float(radius))

    @classmethod
    def interval(cls, coord: int, lo=None, hi=None) -> "ConvexPiece":
        if lo is not None and hi is not None and lo > hi:
            raise InputError("empty interval piece")
        return cls("interval", coord=int(coord), lo=None if lo is None else float(lo),
                   hi=None if hi is None else float(hi))

    def project(self, x: np.ndarray) -> np.ndarray:
        if self.kind == "halfspace":
            a = np.asarray(self.a)
            v = a @ x - self.b
            return x if v <= 0 else x - (v / (a @ a)) * a
        if self.kind == "ball":
            c = np.asarray(self.center)
            d = x - c
            nd = np.linalg.norm(d)
            return x if nd <= self.radius else c + (self.radius / nd) * d
        y = x.copy()
        v = y[self.coord]
        if self.lo is not None and v < self.lo:
            y[self.coord] = self.lo
        elif self.hi is not None and v > self.hi:
            y[self.coord] = self.hi
        return y

    def violation(self, x: np.ndarray) -> float:
        """Distance from x to the piece (0 inside)."""
        return float(np.linalg.norm(x - self.project(x)))

    def contains(self, x, tol: float = 0.0) -> bool:
        return self.violation(np.asarray(x, dtype=float)) <= tol

    def to_dict(self) -> dict:
        if self.kind == "halfspace":
            return {"type": "halfspace", "a": list(self.a), "b": self.b}
        if self.kind == "ball":
            return {"type": "ball", "center": list(self.center), "radius": self.radius}
        return {"type": "interval", "coord": self.coord, "lo": self.lo, "hi": self.hi}


@dataclass
class ProjectionResult:
    point: np.ndarray
    distance: float
    cycles: int


def project_intersection(pieces: Sequence[ConvexPiece], x, tol: Tolerances = DEFAULT_TOL,
                         max_cycles: int = 100_000) -> ProjectionResult:
    """Euclidean projection of ``x`` onto the intersection of ``pieces`` (Dykstra).

    The stopping rule is relative to the current distance so that very small
    distances (near a boundary point) are resolved to full relative accuracy.
    """
    if not pieces:
        raise InputError("project_intersection needs at least one piece")
    x = np.array(x, dtype=float)
    if all(p.contains(x) for p in pieces):
        return ProjectionResult(x.copy(), 0.0, 0)
    if len(pieces) == 1:
        p = pieces[0].project(x)
        return ProjectionResult(p, float(np.linalg.norm(x - p)), 1)

    nx = 1.0 + np.linalg.norm(x)
    atol = 64 * np.finfo(float).eps * nx
    q = [np.zeros_like(x) for _ in pieces]
    p = x.copy()
    for cycle in range(1, max_cycles + 1):
        p_prev = p
        dq = 0.0
        for i, piece in enumerate(pieces):
            y = piece.project(p + q[i])
            q_new = p + q[i] - y
            dq += float(np.sum((q_new - q[i]) ** 2))
            q[i] = q_new
            p = y
        d = float(np.linalg.norm(x - p))
        if d > 1e8 * nx:
            raise NumericalFailure("Dykstra iterates diverge: intersection likely empty", best=p)
        step = float(np.linalg.norm(p - p_prev))
        viol = max(piece.violation(p) for piece in pieces)
        rel = 1e-10 * d + atol
        if step <= rel and np.sqrt(dq) <= 1e-8 * d + atol and viol <= min(tol.dist_tol, 1e-6 * d + atol):
            return ProjectionResult(p, d, cycle)
    raise NumericalFailure("Dykstra did not converge within the cycle cap", best=p)
