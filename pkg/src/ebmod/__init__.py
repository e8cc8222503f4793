"""Lower, upper and empirical local error bound moduli.

For a max-type function phi and a point xbar on the boundary of [phi <= 0]
the package computes

* a lower estimate from limiting active index sets (sampled),
* an upper estimate as the distance from the origin to the end set of the
  subdifferential (exact for finitely generated subdifferentials),
* the empirical modulus liminf phi(x) / d(x, [phi <= 0]) on shrinking shells,

together with the underlying kernels (simplex LP, minimum-norm point,
alternating projections) and end-set / gauge tools for convex bodies.
"""
from .core import (DEFAULT_TOL, BodyOracle, CapacityError, EbmodError, InputError, NumericalFailure,
                   PointSet, SamplingConfig, Tolerances, augment_with_origin, support)
from .endset import end_set_distance, end_set_member, face_collection, gauge
from .estimator import Scenario, empirical_ebm, level_set_distance, sandwich_report
from .linsys import (Curve, LinearSystem, active_indices, index_collection, modulus_formula,
                     regularity_probe, residual)
from .maxfunc import (MaxFunction, SmoothPiece, exposed_collection, limiting_collection,
                      lower_estimate, subdifferential, upper_estimate)
from .solvers import ConvexPiece, LpProblem, lp_solve, min_norm_point, project_intersection

__version__ = "0.1.0"
