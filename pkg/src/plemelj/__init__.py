"""Cauchy principal values, Cauchy transforms and Plemelj boundary values for
Dini-continuous densities on planar curves."""
from __future__ import annotations

__version__ = "0.1.0"

from .curve import (Curve, NormalizedFrame, classify_side, curve_from_points, make_builtin_curve,  # noqa: E402
                    normalize_at, regularized_kernel, winding_number)
from .density import (Density, ModulusEstimate, Regularity, builtin_density, classify_regularity,  # noqa: E402
                      estimate_modulus, modulus_from_samples, tabulated_density)
from .estimators import CauchyTransform, ModulusOfContinuityEstimator  # noqa: E402
from .exceptions import (ConfigError, ConvergenceError, CurveError, DensityError, NormalizationError,  # noqa: E402
                         OnCurveError, PlemeljError, QuadratureError, SelfIntersectionError, SideError)
from .pv import (ExistenceResult, PVConfig, PVResult, even_odd_split, pv_curve, pv_exists_predicate,  # noqa: E402
                 pv_interval_excision, pv_interval_subtraction)
from .transform import (ApproachSequence, BoundaryValue, ConvergenceReport, TransformConfig,  # noqa: E402
                        boundary_values, cauchy_transform, make_sequence, run_convergence, verify_jump)

__all__ = [
    "Curve", "NormalizedFrame", "classify_side", "curve_from_points", "make_builtin_curve", "normalize_at",
    "regularized_kernel", "winding_number",
    "Density", "ModulusEstimate", "Regularity", "builtin_density", "classify_regularity", "estimate_modulus",
    "modulus_from_samples", "tabulated_density",
    "CauchyTransform", "ModulusOfContinuityEstimator",
    "ConfigError", "ConvergenceError", "CurveError", "DensityError", "NormalizationError", "OnCurveError",
    "PlemeljError", "QuadratureError", "SelfIntersectionError", "SideError",
    "ExistenceResult", "PVConfig", "PVResult", "even_odd_split", "pv_curve", "pv_exists_predicate",
    "pv_interval_excision", "pv_interval_subtraction",
    "ApproachSequence", "BoundaryValue", "ConvergenceReport", "TransformConfig", "boundary_values",
    "cauchy_transform", "make_sequence", "run_convergence", "verify_jump",
]
