"""Numerical laboratory for powers of the logarithmic Laplacian.

Dirichlet eigenvalues of the operator with Fourier symbol (2 log|xi|)^m on
bounded domains in one and two dimensions, plus certificate checks for the
spectral bounds that go with them.
"""

__version__ = "0.1.0"

from .coeffs import OperatorParams, alpha_coefficients, kappa_eval, kappa_taylor, structural_constants, symbol

__all__ = [
    "OperatorParams",
    "alpha_coefficients",
    "kappa_eval",
    "kappa_taylor",
    "structural_constants",
    "symbol",
    "__version__",
]

# galerkin, operator, bounds, cache, and experiments are imported as
# submodules; they stay out of the package root so that importing the light
# coefficient layer never pulls in scipy's solvers.
