"""Exponent algebra for the weakly coupled system.

Everything here is closed form: the critical-curve function F(p, q; n), the
Strauss polynomial gamma(p, n) and its positive root, the auxiliary exponents
mu and nu used by the weighted norms, and the selection of the lifespan law.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

F_ZERO_TOL = 1e-12


class Branch(str, Enum):
    """Which lifespan law applies to an exponent pair."""

    CRITICAL_UNEQUAL = "CriticalUnequal"
    CRITICAL_EQUAL = "CriticalEqual"
    SUPERCRITICAL = "Supercritical"
    SUBCRITICAL = "Subcritical"

    @property
    def is_critical(self) -> bool:
        return self in (Branch.CRITICAL_UNEQUAL, Branch.CRITICAL_EQUAL)


class ExponentDomainError(ValueError):
    """Raised for exponents or dimensions outside the admissible range."""


def _check_pq(p: float, q: float) -> None:
    if not (p > 1.0 and q > 1.0):
        raise ExponentDomainError(f"need p > 1 and q > 1, got p={p}, q={q}")


def critical_exponent_F(p: float, q: float, n: int) -> float:
    """Critical-curve function F(p, q; n).

    Positive values give a power-law lifespan, zero is the critical curve and
    negative values correspond to global existence.
    """
    _check_pq(p, q)
    denom = p * q - 1.0
    first = (p + 2.0 + 1.0 / q) / denom
    second = (q + 2.0 + 1.0 / p) / denom
    return max(first, second) - (n - 1) / 2.0


def gamma_strauss(p: float, n: int) -> float:
    """Strauss polynomial 2 + (n+1)p - (n-1)p^2."""
    return 2.0 + (n + 1) * p - (n - 1) * p * p


def strauss_root(n: int) -> float:
    """Positive root of the Strauss polynomial (the + branch adds positive terms, no cancellation)."""
    if n < 2:
        raise ExponentDomainError(f"need n >= 2, got {n}")
    disc = math.sqrt((n + 1) ** 2 + 8.0 * (n - 1))
    return (n + 1 + disc) / (2.0 * (n - 1))


def mu_exponent(p: float, q: float, n: int) -> float:
    return 1.0 / p - (q - 1.0) * critical_exponent_F(p, q, n)


def nu_exponent(p: float, q: float) -> float:
    _check_pq(p, q)
    return q * (p - 1.0) / (p * (p * q - 1.0))


def theorem_strip(n: int) -> tuple[float, float]:
    """Open interval ((n+1)/(n-1), (n+3)/(n-1)) in which both exponents must lie."""
    return (n + 1) / (n - 1), (n + 3) / (n - 1)


def classify(F: float, p: float, q: float, tol: float = F_ZERO_TOL) -> Branch:
    if abs(F) <= tol:
        return Branch.CRITICAL_EQUAL if p == q else Branch.CRITICAL_UNEQUAL
    return Branch.SUPERCRITICAL if F > 0 else Branch.SUBCRITICAL


@dataclass(frozen=True)
class ExponentSet:
    """Validated problem parameters together with all derived exponents.

    Attributes
    ----------
    p, q : float
        Nonlinearity powers, both > 1.
    n : int
        Even space dimension n = 2m + 2 with m >= 2.
    k : float
        Support radius of the data, k > 1.
    F, gamma, mu, nu : float
        Derived exponents; ``gamma`` is evaluated at p.
    branch : Branch
        Lifespan law selected from the sign of F (or an explicit override).
    """

    p: float
    q: float
    n: int
    k: float
    F: float
    gamma: float
    mu: float
    nu: float
    branch: Branch

    @property
    def m(self) -> int:
        return (self.n - 2) // 2

    def in_theorem_strip(self) -> bool:
        lo, hi = theorem_strip(self.n)
        return lo < self.p <= self.q < hi


def derive(
    p: float,
    q: float,
    n: int,
    k: float = 1.5,
    branch: Branch | str | None = None,
    tol: float = F_ZERO_TOL,
) -> ExponentSet:
    """Validate (p, q, n, k) and fill in F, gamma, mu, nu and the branch.

    Parameters
    ----------
    branch : Branch or str, optional
        Force a branch; useful because floating-point exponents rarely land
        exactly on the critical curve.  Forcing a critical branch also sets F
        to zero so that downstream formulas stay consistent.
    """
    _check_pq(p, q)
    if n % 2 != 0 or n < 6:
        raise ExponentDomainError(f"n must be even and >= 6 (m >= 2), got {n}")
    if not k > 1.0:
        raise ExponentDomainError(f"support radius must exceed 1, got k={k}")
    F = critical_exponent_F(p, q, n)
    if branch is None:
        chosen = classify(F, p, q, tol)
    else:
        chosen = Branch(branch)
        if chosen.is_critical:
            F = 0.0
    mu = 1.0 / p - (q - 1.0) * F
    return ExponentSet(
        p=float(p),
        q=float(q),
        n=int(n),
        k=float(k),
        F=F,
        gamma=gamma_strauss(p, n),
        mu=mu,
        nu=nu_exponent(p, q),
        branch=chosen,
    )


def lifespan_exponent(e: ExponentSet) -> float:
    """Power of 1/eps in the lifespan law (in log T for the critical branches)."""
    if e.branch is Branch.CRITICAL_UNEQUAL:
        return min(e.p, e.q) * (e.p * e.q - 1.0)
    if e.branch is Branch.CRITICAL_EQUAL:
        return e.p * (e.p - 1.0)
    if e.branch is Branch.SUPERCRITICAL:
        return 1.0 / e.F
    return math.inf


def log_lifespan_lower_bound(e: ExponentSet, eps: float, C: float = 1.0) -> float:
    """Natural log of the lifespan lower bound; avoids overflow for critical laws."""
    if eps <= 0 or C <= 0:
        raise ValueError("eps and C must be positive")
    a = lifespan_exponent(e)
    if e.branch is Branch.SUBCRITICAL:
        return math.inf
    if e.branch.is_critical:
        return C * eps ** (-a)
    return math.log(C) - a * math.log(eps)


def lifespan_lower_bound(e: ExponentSet, eps: float, C: float = 1.0) -> float:
    """Lifespan lower bound for the branch of ``e``.

    Returns ``math.inf`` for the subcritical branch (global existence) and
    when the critical exponential overflows a double.
    """
    log_t = log_lifespan_lower_bound(e, eps, C)
    if log_t > 709.0:
        return math.inf
    return math.exp(log_t)
