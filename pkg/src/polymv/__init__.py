"""Polyharmonic mean value machinery.

Exact mean-value coefficients from Vandermonde minors, symbolic certificates
for the inversion-built polyharmonic candidates, star-shaped domain geometry,
deterministic quadrature, and the Gauss mean value gap experiments.
"""

__version__ = "0.1.0"

from .coefficients import (
    AlphaVector,
    CoefficientSet,
    VandermondeMatrix,
    biharmonic_coefficients,
    build_vandermonde,
    coefficient_bound_check,
    coefficients,
    det_vandermonde,
    det_vandermonde_closed,
    geometric_alphas,
    geometric_coefficients,
    minor_v_k1,
)
from .symbolic import (
    MultiPoly,
    PoleFunction,
    almansi_sample,
    build_h,
    evaluate,
    is_polyharmonic,
    kelvin_closed_form,
    kelvin_transform,
    kuran_function,
    laplacian_pole,
    laplacian_poly,
    sign_pattern_check,
)

__all__ = [
    "__version__",
    "AlphaVector",
    "CoefficientSet",
    "VandermondeMatrix",
    "biharmonic_coefficients",
    "build_vandermonde",
    "coefficient_bound_check",
    "coefficients",
    "det_vandermonde",
    "det_vandermonde_closed",
    "geometric_alphas",
    "geometric_coefficients",
    "minor_v_k1",
    "MultiPoly",
    "PoleFunction",
    "almansi_sample",
    "build_h",
    "evaluate",
    "is_polyharmonic",
    "kelvin_closed_form",
    "kelvin_transform",
    "kuran_function",
    "laplacian_pole",
    "laplacian_poly",
    "sign_pattern_check",
]
