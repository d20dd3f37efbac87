"""Fractal interpolation surfaces over a colored triangular partition, and their integrals."""

from .bfif import (BfifModel, apply_T, assemble_model, build_model, edge_consistency, evaluate,
                   render_attractor)
from .corpus import builtin, sample_dataset
from .errors import (ColoringError, ConvergenceError, DegenerateTriangleError, DomainError,
                     FractriError, MissingDataError, SingularModelError)
from .geometry import Triangle2, barycentric, locate
from .ifs import ScalingPolicy
from .partition import ColoredPartition, partition_triangle, verify_coloring
from .quadrature import (IntegralReport, error_bound, integrate, integrate_alternative,
                         monte_carlo_bfif_integral, reference_integral)
from .serialize import load_model, save_model

__all__ = [
    "BfifModel", "ColoredPartition", "ColoringError", "ConvergenceError", "DegenerateTriangleError",
    "DomainError", "FractriError", "IntegralReport", "MissingDataError", "ScalingPolicy",
    "SingularModelError", "Triangle2", "apply_T", "assemble_model", "barycentric", "build_model",
    "builtin", "edge_consistency", "error_bound", "evaluate", "integrate", "integrate_alternative",
    "load_model", "locate", "monte_carlo_bfif_integral", "partition_triangle", "reference_integral",
    "render_attractor", "sample_dataset", "save_model", "verify_coloring",
]
