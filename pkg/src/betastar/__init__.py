"""Beta* polytopes, hyperbolic Poisson zero cells and typical Poisson-Voronoi cells."""

from __future__ import annotations

__version__ = "0.1.0"

from .analytic import (BetaStarParams, ExpectedFVector, Phase, Route, alpha_for_voronoi,
                       alpha_for_zero_cell, expected_f_vector, expected_f_vector_voronoi,
                       expected_f_vector_zero_cell, expected_intrinsic_volume, expected_T,
                       lambda_crit, limit_f_vector, phase_classify)
from .errors import (BetaStarError, BoundExceeded, DegenerateInput, FaceNotFound,
                     InfiniteExpectation, OriginNotInterior, ParameterError, QuadratureError)
from .geometry import IncrementalHull, Polytope, convex_hull, f_vector, polar_dual
from .sampling import (NotTerminated, RngStream, sample_beta_star_polytope,
                       sample_voronoi_typical_cell, sample_zero_cell)

__all__ = [
    "BetaStarError", "BetaStarParams", "BoundExceeded", "DegenerateInput", "ExpectedFVector",
    "FaceNotFound", "IncrementalHull", "InfiniteExpectation", "NotTerminated",
    "OriginNotInterior", "ParameterError", "Phase", "Polytope", "QuadratureError", "RngStream",
    "Route", "alpha_for_voronoi", "alpha_for_zero_cell", "convex_hull", "expected_T",
    "expected_f_vector", "expected_f_vector_voronoi", "expected_f_vector_zero_cell",
    "expected_intrinsic_volume", "f_vector", "lambda_crit", "limit_f_vector", "phase_classify",
    "polar_dual", "sample_beta_star_polytope", "sample_voronoi_typical_cell", "sample_zero_cell",
]
