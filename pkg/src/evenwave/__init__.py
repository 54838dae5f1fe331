"""Numerical laboratory for lifespan estimates of weakly coupled radial wave systems.

The system studied is

    u_tt - u_rr - (n-1)/r u_r = |v|^p,
    v_tt - v_rr - (n-1)/r v_r = |u|^q,

in even space dimension n = 2m + 2 (m >= 2), with small compactly supported
radial data.  The subpackages cover the exponent algebra, the singular kernels
of the even-dimensional representation formula, free and Duhamel solution
operators, the Picard iteration in weighted sup norms, numerical checks of the
a priori integral bounds, and a finite-difference blow-up oracle.
"""

from evenwave.exponents import (
    Branch,
    ExponentSet,
    critical_exponent_F,
    derive,
    gamma_strauss,
    lifespan_lower_bound,
    strauss_root,
)

__all__ = [
    "Branch",
    "ExponentSet",
    "critical_exponent_F",
    "derive",
    "gamma_strauss",
    "lifespan_lower_bound",
    "strauss_root",
]

__version__ = "0.1.0"
