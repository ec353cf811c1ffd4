from fhnwave.dynamics.fhn import (
    FhnParams,
    fast_eigenframe,
    fast_eigenvalues,
    fast_equilibrium,
    fast_eval,
    fhn_eval,
    fhn_jacobian,
    fhn_rhs,
    fhn_slow_row_factored,
    taylor_coeffs,
)
from fhnwave.dynamics.polynomial import PolynomialField, SlowFastField, Term

__all__ = [
    "FhnParams",
    "PolynomialField",
    "SlowFastField",
    "Term",
    "fast_eigenframe",
    "fast_eigenvalues",
    "fast_equilibrium",
    "fast_eval",
    "fhn_eval",
    "fhn_jacobian",
    "fhn_rhs",
    "fhn_slow_row_factored",
    "taylor_coeffs",
]
