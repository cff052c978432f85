"""Preimages of relaxed one-sided Lipschitz set-valued maps.

The package computes the preimage F^{-1}(ybar) of a set-valued map with a
negative ROSL constant by intersecting unions of localization balls over
base points, validates the result against a brute-force oracle, and ships
the extreme-point refinement of the ball generators.
"""

from .geometry import (DEFAULT_TOL, Ball, Polytope, as_vector, ball_contains,
                       contains, convex_hull, extreme_points, project_onto,
                       support)
from .maps import (RoslReport, SetValuedMap, affine_polytope, check_rosl,
                   estimate_ell, example34, load_map, piecewise1d, rosl_gap,
                   usc_defect)
from .preimage import (GridMask, GridSpec, gf_balls, gf_extreme_filter,
                       gf_membership, inflate_refine, mask_diff_summary,
                       mask_to_csv, mask_to_pgm, preimage_oracle,
                       preimage_outer, solvability_check,
                       witness_excluding_base)

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_TOL", "Ball", "Polytope", "as_vector", "ball_contains",
    "contains", "convex_hull", "extreme_points", "project_onto", "support",
    "RoslReport", "SetValuedMap", "affine_polytope", "check_rosl",
    "estimate_ell", "example34", "load_map", "piecewise1d", "rosl_gap",
    "usc_defect",
    "GridMask", "GridSpec", "gf_balls", "gf_extreme_filter", "gf_membership",
    "inflate_refine", "mask_diff_summary", "mask_to_csv", "mask_to_pgm",
    "preimage_oracle", "preimage_outer", "solvability_check",
    "witness_excluding_base",
]
