"""Built-in scenarios and bodies used by the reproduction suite.

Names: ``stu-war`` (a 1-D function with dyadic pieces), ``max-quad-affine``
(max of a quadratic and an affine piece), ``circle-weighted`` and
``circle-unit`` (curve systems describing the unit disk) and ``disk-slab``
(a 2-D body whose end set is not closed under the face union).
"""
from __future__ import annotations

import math

import numpy as np

from .core import BodyOracle, InputError, PointSet
from .estimator import Scenario
from .linsys import Curve, LinearSystem
from .maxfunc import MaxFunction, SmoothPiece
from .solvers import ConvexPiece

TWO_PI = 2.0 * math.pi
BUILTINS = ("stu-war", "max-quad-affine", "circle-weighted", "circle-unit", "disk-slab")


# -- stu-war ------------------------------------------------------------------
class StuWardFunction:
    """phi(x) = 0 for x <= 0; on [2^-(n+1), 2^-n] (n = 1, 2, ...) it is 2^-n for odd n
    and 3x - 2^-n for even n; phi(x) = x for x > 1/2.

    Continuous, with phi(x) / x = 1 exactly at x = 2^-n, n odd.
    """

    dim = 1

    def value(self, x) -> float:
        x = float(np.asarray(x, dtype=float).reshape(-1)[0])
        if x <= 0:
            return 0.0
        if x > 0.5:
            return x
        # x = m 2^e with m in [1/2, 1): 2^-(n+1) <= x < 2^-n for n = -e
        _, e = math.frexp(x)
        n = -e
        if n % 2:
            return math.ldexp(1.0, -n)
        return 3.0 * x - math.ldexp(1.0, -n)

    __call__ = value


def dyadic_radii(r_max: float = 1e-2, r_min: float = 1e-7) -> tuple[float, ...]:
    lo = math.ceil(-math.log2(r_max))
    hi = math.floor(-math.log2(r_min))
    return tuple(math.ldexp(1.0, -n) for n in range(lo, hi + 1))


def stu_war() -> Scenario:
    return Scenario("stu-war", "builtin", [0.0], StuWardFunction(),
                    distance=lambda x: max(float(x[0]), 0.0),
                    subdiff=PointSet([[0.0], [1.0]]),
                    pinned={"lower": 0.0, "subdifferential": [0.0, 1.0]},
                    extra_radii=dyadic_radii())


# -- max-quad-affine ----------------------------------------------------------
QUAD_CENTER = np.array([-0.25, -0.25])
QUAD_RADIUS = math.sqrt(2.0) / 4.0


def max_quad_affine_function() -> MaxFunction:
    return MaxFunction([SmoothPiece.quadratic(np.eye(2), [0.5, 0.5], 0.0),
                        SmoothPiece.affine([1.0, 1.0], 0.0)])


def _quad_distance(x: np.ndarray) -> float:
    # the level set is the disk |x - c| <= R; f1(x) = |x - c|^2 - R^2 avoids cancellation
    f1 = float(x @ x + 0.5 * (x[0] + x[1]))
    if f1 <= 0:
        return 0.0
    return f1 / (float(np.linalg.norm(x - QUAD_CENTER)) + QUAD_RADIUS)


def max_quad_affine() -> Scenario:
    pieces = [ConvexPiece.ball(QUAD_CENTER, QUAD_RADIUS), ConvexPiece.halfspace([1.0, 1.0], 0.0)]
    return Scenario("max-quad-affine", "builtin", [0.0, 0.0], max_quad_affine_function(),
                    pieces=pieces, distance=_quad_distance)


# -- circle systems -----------------------------------------------------------
def _polar(x: np.ndarray) -> tuple[float, float, float]:
    """(rho, rho - 1, theta) with rho - 1 free of cancellation near the unit circle."""
    rho = math.hypot(x[0], x[1])
    rho_m1 = ((x[0] - 1.0) * (x[0] + 1.0) + x[1] * x[1]) / (rho + 1.0)
    return rho, rho_m1, math.atan2(x[1], x[0])


def circle_curve(weighted: bool) -> Curve:
    w = (lambda t: t) if weighted else (lambda t: np.ones_like(t))

    def coeff(t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        wt = w(t)
        return np.column_stack([wt * np.cos(t), wt * np.sin(t)]), wt

    def evaluate(ts, x):
        ts = np.asarray(ts, dtype=float)
        rho, rho_m1, theta = _polar(x)
        return w(ts) * (rho_m1 - 2.0 * rho * np.sin(0.5 * (ts - theta)) ** 2)

    def scalar(x):
        rho, rho_m1, theta = _polar(x)
        if weighted:
            return lambda t: t * (rho_m1 - 2.0 * rho * math.sin(0.5 * (t - theta)) ** 2)
        return lambda t: rho_m1 - 2.0 * rho * math.sin(0.5 * (t - theta)) ** 2

    def hints(x):
        theta = math.atan2(x[1], x[0]) % TWO_PI
        return [0.0, theta, TWO_PI]

    def active_solver(x, tol):
        rho, rho_m1, theta = _polar(x)
        if rho_m1 > tol:
            return None  # outside the disk: no closed form, use the grid
        th = theta % TWO_PI
        at_zero = min(th, TWO_PI - th) <= tol
        if weighted:
            if rho_m1 < -tol:
                return [0.0]
            return [0.0, TWO_PI] if at_zero else [0.0, th]
        return [0.0, TWO_PI] if at_zero else [th]

    name = "circle-weighted" if weighted else "circle-unit"
    return Curve(0.0, TWO_PI, coeff, 2, name=name, evaluate=evaluate, hints=hints,
                 active_solver=active_solver, scalar=scalar)


def circle_system(weighted: bool, grid_size: int = 4096) -> LinearSystem:
    return LinearSystem(curve=circle_curve(weighted), grid_size=grid_size)


def _disk_distance(x: np.ndarray) -> float:
    return max(_polar(x)[1], 0.0)


def circle_scenario(weighted: bool, grid_size: int = 4096) -> Scenario:
    sys = circle_system(weighted, grid_size)
    return Scenario.from_system(sys, [1.0, 0.0], name=sys.curve.name, distance=_disk_distance)


# -- disk-slab body -----------------------------------------------------------
def disk_slab_member(x) -> bool:
    x1, x2 = float(x[0]), float(x[1])
    if not (0.0 <= x1 <= 2.0 and x2 >= 0.0):
        return False
    return x2 <= 1.0 + math.sqrt(max(0.0, 1.0 - (x1 - 1.0) ** 2))


def disk_slab(debug: bool = False) -> BodyOracle:
    return BodyOracle(2, disk_slab_member, radius_bound=2.0 * math.sqrt(2.0), contains_origin=True,
                      name="disk-slab", debug=debug)


def disk_slab_end_set(x, tol: float = 1e-12) -> bool:
    """Closed-form end-set membership: the upper arc, or the right edge below height 1."""
    x1, x2 = float(x[0]), float(x[1])
    on_arc = 0.0 <= x1 <= 2.0 and abs(x2 - 1.0 - math.sqrt(max(0.0, 1.0 - (x1 - 1.0) ** 2))) <= tol
    on_edge = abs(x1 - 2.0) <= tol and 0.0 <= x2 < 1.0
    return on_arc or on_edge


def builtin(name: str, grid_size: int = 4096):
    """Scenario (or body, for ``disk-slab``) registered under ``name``."""
    if name == "stu-war":
        return stu_war()
    if name == "max-quad-affine":
        return max_quad_affine()
    if name == "circle-weighted":
        return circle_scenario(True, grid_size)
    if name == "circle-unit":
        return circle_scenario(False, grid_size)
    if name == "disk-slab":
        return disk_slab()
    raise InputError(f"unknown builtin {name!r}; choose from {', '.join(BUILTINS)}")
