"""Numerical bedrock: special functions, quadrature and dense eigensolvers."""
from .special import (
    bessel_j,
    bessel_j_pair,
    bessel_j_zero,
    bessel_j_zeros,
    bessel_k,
    gamma_fn,
    herbst_constant,
    jacobi_p,
    jacobi_p_deriv,
    scaled_k_pair,
)
from .quadrature import QuadRule, gauss_rule, graded_rule, composite_rule
from .linalg import SymEigResult, cholesky, sym_eig

__all__ = [
    "bessel_j",
    "bessel_j_pair",
    "bessel_j_zero",
    "bessel_j_zeros",
    "bessel_k",
    "gamma_fn",
    "herbst_constant",
    "jacobi_p",
    "jacobi_p_deriv",
    "scaled_k_pair",
    "QuadRule",
    "gauss_rule",
    "graded_rule",
    "composite_rule",
    "SymEigResult",
    "cholesky",
    "sym_eig",
]
