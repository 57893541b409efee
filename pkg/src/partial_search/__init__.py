"""Exact numerics for quantum partial search with unevenly distributed targets."""

from .errors import (NoRootError, PartialSearchError, ProblemError, RegimeError,
                     ResourceError, SymmetryError)
from .problem import (DatabaseGeometry, Problem, RotationAngles, TargetDistribution,
                      analysis_problem, angles, beta, make_problem)

__all__ = [
    "DatabaseGeometry", "NoRootError", "PartialSearchError", "Problem", "ProblemError",
    "RegimeError", "ResourceError", "RotationAngles", "SymmetryError", "TargetDistribution",
    "analysis_problem", "angles", "beta", "make_problem",
]
__version__ = "0.1.0"
