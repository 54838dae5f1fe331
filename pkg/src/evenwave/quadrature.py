"""Reference quadrature rules shared by the kernel, free-wave and Duhamel code."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

import numpy as np


class Rule(str, Enum):
    GAUSS_LEGENDRE = "GaussLegendre"
    CLENSHAW_CURTIS = "ClenshawCurtis"


class QuadratureError(RuntimeError):
    """Adaptive refinement did not reach the requested tolerance."""


@dataclass(frozen=True)
class QuadratureSpec:
    """Accuracy controls for the adaptive rules.

    ``base_nodes`` is the number of nodes per panel; each refinement level
    doubles the number of panels, up to ``max_levels`` times.
    """

    tol: float = 1e-10
    max_levels: int = 20
    base_nodes: int = 32
    rule: Rule = Rule.GAUSS_LEGENDRE

    def relaxed(self, tol: float) -> "QuadratureSpec":
        return QuadratureSpec(tol, self.max_levels, self.base_nodes, self.rule)


DEFAULT_QUAD = QuadratureSpec()


def _clenshaw_curtis(n: int) -> tuple[np.ndarray, np.ndarray]:
    # n interior-inclusive Chebyshev extreme points on [-1, 1]
    if n < 2:
        return np.zeros(1), np.full(1, 2.0)
    N = n - 1
    theta = np.pi * np.arange(n) / N
    x = -np.cos(theta)
    w = np.zeros(n)
    inner = np.ones(N - 1)
    if N % 2 == 0:
        w[0] = w[N] = 1.0 / (N * N - 1)
        for kk in range(1, N // 2):
            inner -= 2.0 * np.cos(2 * kk * theta[1:-1]) / (4 * kk * kk - 1)
        inner -= np.cos(N * theta[1:-1]) / (N * N - 1)
    else:
        w[0] = w[N] = 1.0 / (N * N)
        for kk in range(1, (N - 1) // 2 + 1):
            inner -= 2.0 * np.cos(2 * kk * theta[1:-1]) / (4 * kk * kk - 1)
    w[1:-1] = 2.0 * inner / N
    return x, w


@lru_cache(maxsize=64)
def unit_rule(n: int, rule: Rule = Rule.GAUSS_LEGENDRE) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights on [0, 1]."""
    if Rule(rule) is Rule.GAUSS_LEGENDRE:
        x, w = np.polynomial.legendre.leggauss(n)
    else:
        x, w = _clenshaw_curtis(n)
    return 0.5 * (x + 1.0), 0.5 * w


def composite_unit_rule(n: int, panels: int, rule: Rule = Rule.GAUSS_LEGENDRE) -> tuple[np.ndarray, np.ndarray]:
    """``panels`` equal copies of the n-point rule tiling [0, 1]."""
    x, w = unit_rule(n, rule)
    offsets = np.arange(panels)[:, None]
    return ((offsets + x[None, :]) / panels).ravel(), np.tile(w / panels, panels)


@lru_cache(maxsize=16)
def tanh_sinh_rule(level: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Double-exponential rule on [0, 1] with step 2^-level.

    Returns the nodes, the distances to the far endpoint (1 - x, computed
    without cancellation) and the weights.  Nodes whose weight underflows
    relative to double precision are dropped.
    """
    h = 2.0 ** (-level)
    kmax = int(np.ceil(3.2 / h))
    s = h * np.arange(-kmax, kmax + 1)
    u = 0.5 * np.pi * np.sinh(s)
    # x = (1 + tanh u)/2 = 1/(1 + e^{-2u}); 1 - x = 1/(1 + e^{2u})
    x = 1.0 / (1.0 + np.exp(-2.0 * u))
    xc = 1.0 / (1.0 + np.exp(2.0 * u))
    w = h * 0.25 * np.pi * np.cosh(s) / np.cosh(u) ** 2
    keep = (x > 0) & (xc > 0) & (w > 1e-300)
    return x[keep], xc[keep], w[keep]
