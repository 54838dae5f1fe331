"""Numerical checks of the a priori integral bounds.

* ``eval_I`` evaluates the four characteristic-coordinate integrals I_1..I_4
  for a majorant Phi that depends on tau_- = (tau - lam + 2k)/k only.
* ``check_prop_bounds`` compares sup_grid I_k / (tau_-^-eta W^-1 [E(T)])
  (or Z^-1 for the q column) on a grid of Omega_T and its 2x refinement.
* ``check_beta_lemma`` integrates the beta-lemma left sides with scipy's
  algebraic-weight quadrature.
* ``check_exponent_identities`` evaluates the mu/nu identities.

All double integrals use nested tanh-sinh rules whose endpoint distances are
carried separately, so the square-root and power singularities at the ends
are evaluated without cancellation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable

import numpy as np
from scipy import integrate

from evenwave.exponents import Branch, ExponentSet, critical_exponent_F, derive, theorem_strip
from evenwave.picard import E1, E2, W_weight, Z_weight
from evenwave.quadrature import tanh_sinh_rule

DEFAULT_LEVEL = 5
ETAS = (0.0, 0.5)


class IntegralDomainError(ValueError):
    """Point outside Omega_T, or t < r for I_2, I_3, I_4."""


# ---------------------------------------------------------------------------
# majorants


@dataclass(frozen=True)
class MajorantSpec:
    """A weight product Phi(tau_-) and the nonlinearity exponent it pairs with.

    ``column`` is ``'p'`` (bound by W^-1, extra factor E_1 for Z^-p) or
    ``'q'`` (bound by Z^-1, extra factor E_2 for W^-q).
    """

    tag: str
    column: str
    fn: Callable[[ExponentSet, np.ndarray], np.ndarray]
    growth: bool = False

    def __call__(self, e: ExponentSet, tau_minus):
        return self.fn(e, np.asarray(tau_minus, dtype=float))

    def power(self, e: ExponentSet) -> float:
        return e.p if self.column == "p" else e.q


def _phi(e, tm, i):
    return tm ** (e.m + 0.5 + i)


def _spec(tag, column, fn, growth=False):
    return MajorantSpec(tag, column, fn, growth)


MAJORANTS = {
    s.tag: s
    for s in (
        _spec("phi0^-p", "p", lambda e, tm: _phi(e, tm, 0) ** -e.p),
        _spec("phi0^(1-p)phi1^-1", "p", lambda e, tm: _phi(e, tm, 0) ** (1 - e.p) / _phi(e, tm, 1)),
        _spec("phi0^(1-p)Z^-1", "p", lambda e, tm: _phi(e, tm, 0) ** (1 - e.p) / Z_weight(e, tm)),
        _spec("phi0^-1Z^(1-p)", "p", lambda e, tm: Z_weight(e, tm) ** (1 - e.p) / _phi(e, tm, 0)),
        _spec("phi1^-1Z^(1-p)", "p", lambda e, tm: Z_weight(e, tm) ** (1 - e.p) / _phi(e, tm, 1)),
        _spec("Z^-p", "p", lambda e, tm: Z_weight(e, tm) ** -e.p, growth=True),
        _spec("phi0^-q", "q", lambda e, tm: _phi(e, tm, 0) ** -e.q),
        _spec("phi0^(1-q)phi1^-1", "q", lambda e, tm: _phi(e, tm, 0) ** (1 - e.q) / _phi(e, tm, 1)),
        _spec("phi0^(1-q)W^-1", "q", lambda e, tm: _phi(e, tm, 0) ** (1 - e.q) / W_weight(e, tm)),
        _spec("phi0^-1W^(1-q)", "q", lambda e, tm: W_weight(e, tm) ** (1 - e.q) / _phi(e, tm, 0)),
        _spec("phi1^-1W^(1-q)", "q", lambda e, tm: W_weight(e, tm) ** (1 - e.q) / _phi(e, tm, 1)),
        _spec("W^-q", "q", lambda e, tm: W_weight(e, tm) ** -e.q, growth=True),
    )
}

PROP12_TAGS = tuple(MAJORANTS)
PROP34_TAGS = ("phi0^-p", "phi0^(1-p)phi1^-1", "Z^-p", "phi0^-q", "phi0^(1-q)phi1^-1", "W^-q")


class Proposition(str, Enum):
    PROP12 = "Prop12"
    PROP34 = "Prop34"

    @property
    def tags(self) -> tuple[str, ...]:
        return PROP12_TAGS if self is Proposition.PROP12 else PROP34_TAGS

    @property
    def integrals(self) -> tuple[int, ...]:
        return (1, 2) if self is Proposition.PROP12 else (3, 4)


def bound_rhs(spec: MajorantSpec, e: ExponentSet, r, t, eta: float, T: float):
    """tau_-^-eta W^-1 (p column) or tau_-^-eta Z^-1 (q column), times E_i(T) for Z^-p / W^-q."""
    tm = (np.asarray(t, dtype=float) - np.asarray(r, dtype=float) + 2 * e.k) / e.k
    base = tm**-eta / (W_weight(e, tm) if spec.column == "p" else Z_weight(e, tm))
    if spec.growth:
        base = base * (E1(e, T) if spec.column == "p" else E2(e, T))
    return base


# ---------------------------------------------------------------------------
# nested quadrature


def _nodes(lo, hi, level):
    """Tanh-sinh nodes on [lo, hi] with exact distances to both ends."""
    x, xc, w = tanh_sinh_rule(level)
    width = hi - lo
    keep = np.minimum(x, xc) * width > 0
    x, xc, w = x[keep], xc[keep], w[keep]
    return lo + width * x, width * x, width * xc, width * w


def _nodes_many(lo, hi, level):
    """Vectorized ``_nodes`` for arrays of intervals; returns (P, N) arrays."""
    x, xc, w = tanh_sinh_rule(level)
    width = (hi - lo)[:, None]
    d_lo = width * x[None, :]
    d_hi = width * xc[None, :]
    wt = width * w[None, :]
    wt = np.where((d_lo > 0) & (d_hi > 0), wt, 0.0)
    return lo[:, None] + d_lo, d_lo, d_hi, wt


@dataclass
class _Nodes:
    """tau_- values and integration weights (with all Phi-free factors)."""

    tau_minus: np.ndarray
    weight: np.ndarray

    def apply(self, e: ExponentSet, spec: MajorantSpec) -> float:
        if self.weight.size == 0:
            return 0.0
        return float(np.sum(self.weight * spec(e, self.tau_minus)))


def _I1_nodes(e, power, r, t, eta, level):
    k, m = e.k, e.m
    a = t - r
    if a <= -k:
        return _Nodes(np.empty(0), np.empty(0))
    beta, _, db_hi, wb = _nodes(-k, a, level)
    lo = abs(a)
    hi = t + r
    alpha, da_lo, _, wa = _nodes_many(np.full(beta.size, lo), np.full(beta.size, hi), level)
    if a >= 0:
        # alpha - (t - r) and alpha - beta measured from the shared corner
        root = da_lo
        diff = da_lo + db_hi[:, None]
    else:
        root = alpha - a
        diff = alpha - beta[:, None]
    inner = np.sum(wa * (diff / k) ** (m + 1 - m * power - eta) * ((alpha + 2 * k) / k) ** (-power / 2) / np.sqrt(root), axis=1)
    return _Nodes((beta + 2 * k) / k, wb * inner)


def _I2_nodes(e, power, r, t, eta, level):
    k, m = e.k, e.m
    a = t - r
    alpha, _, da_hi, wa = _nodes(0.0, a, level)
    beta, _, db_hi, wb = _nodes_many(np.full(alpha.size, -k), alpha, level)
    gap = da_hi[:, None] + 0.5 * db_hi  # t - r - (alpha + beta)/2
    inner = (db_hi / k) ** (2 * m - m * power) * gap ** (-m + 1 - eta)
    outer = ((alpha + 2 * k) / k) ** (-power / 2) / np.sqrt(da_hi)
    return _Nodes(((beta + 2 * k) / k).ravel(), (wb * inner * (wa * outer)[:, None]).ravel())


def _I3_nodes(e, power, r, t, eta, level):
    k, m = e.k, e.m
    a = t - r
    tau, _, lm, wt = _nodes((a - 2 * k) / 3.0, a, level)
    f = (lm / k) ** (m + 0.5 - (m - 1) * power - eta) * ((lm + 2 * k) / k) ** (-power) * ((tau + lm / 2 + 2 * k) / k) ** (-power / 2)
    return _Nodes((tau - lm / 2 + 2 * k) / k, wt * f)


def _I4_nodes(e, power, r, t, eta, level):
    k, m = e.k, e.m
    a = t - r
    tau, lam, _, wt = _nodes(a, t, level)
    f = (lam / k) ** (m + 0.5 - (m - 1) * power - eta) * ((lam + 2 * k) / k) ** (-power) * ((tau + lam + 2 * k) / k) ** (-power / 2)
    return _Nodes(np.full(tau.size, (a + 2 * k) / k), wt * f)


_BUILDERS = {1: _I1_nodes, 2: _I2_nodes, 3: _I3_nodes, 4: _I4_nodes}


def _integral_nodes(which, e, power, r, t, eta, level):
    if which not in _BUILDERS:
        raise ValueError("which must be 1, 2, 3 or 4")
    if r <= 0 or r > t + e.k:
        raise IntegralDomainError(f"(r, t) = ({r}, {t}) outside 0 < r <= t + k")
    if which > 1 and t < r:
        raise IntegralDomainError(f"I_{which} needs t >= r")
    return _BUILDERS[which](e, power, r, t, eta, level)


def eval_I(which: int, Phi: MajorantSpec | str, e: ExponentSet, r: float, t: float, eta: float = 0.0, level: int = DEFAULT_LEVEL) -> float:
    """I_which(Phi, power)(r, t), power = p or q according to the majorant column.

    I_2, I_3 and I_4 require t >= r; on t = r they take their continuous
    extension (the lam-integrands stay integrable as t - r -> 0).
    """
    spec = MAJORANTS[Phi] if isinstance(Phi, str) else Phi
    return _integral_nodes(which, e, spec.power(e), r, t, eta, level).apply(e, spec)


# ---------------------------------------------------------------------------
# proposition checks


def omega_grid(T: float, k: float, nodes: int, below_diagonal: bool = False):
    """Points of Omega_T: t_i = T i/(nodes-1), r_j = (t_i + k) j / nodes.

    Doubling ``nodes`` (minus one in t) nests the coarse grid in the fine one
    up to the r spacing.  With ``below_diagonal`` the points are r_j = t_i j / nodes,
    closing the region at r = t where the I_3 and I_4 ratios take their sup.
    """
    ts = np.linspace(0.0, T, nodes)
    pts = []
    for t in ts:
        if below_diagonal:
            if t <= 0:
                continue
            rs = np.minimum(t * np.arange(1, nodes + 1) / nodes, t)
        else:
            rs = np.minimum((t + k) * np.arange(1, nodes + 1) / nodes, t + k)
        pts.extend((float(r), float(t)) for r in rs)
    return np.array(pts)


@dataclass(frozen=True)
class PropBoundEntry:
    """Sup ratio of one (majorant, integral, eta) triple with its drifts."""

    check_id: str
    tag: str
    integral: int
    eta: float
    sup_ratio: float
    sup_ratio_fine: float
    sup_ratio_quad: float
    argmax: tuple[float, float]

    @property
    def drift(self) -> float:
        ref = max(self.sup_ratio_fine, 1e-300)
        return max(abs(self.sup_ratio_fine - self.sup_ratio), abs(self.sup_ratio_quad - self.sup_ratio)) / ref

    @property
    def finite(self) -> bool:
        return all(np.isfinite(x) for x in (self.sup_ratio, self.sup_ratio_fine, self.sup_ratio_quad))

    def stable(self, tol: float = 0.1) -> bool:
        return self.finite and self.drift < tol


def _sup_ratios(which, e, tags, T, pts, eta, level):
    """sup over pts of I_which / rhs for each tag, with argmax."""
    best = {tag: (0.0, (math.nan, math.nan)) for tag in tags}
    for column in ("p", "q"):
        ctags = [tag for tag in tags if MAJORANTS[tag].column == column]
        if not ctags:
            continue
        power = e.p if column == "p" else e.q
        for r, t in pts:
            nodes = _integral_nodes(which, e, power, r, t, eta, level)
            for tag in ctags:
                spec = MAJORANTS[tag]
                ratio = nodes.apply(e, spec) / float(bound_rhs(spec, e, r, t, eta, T))
                if not np.isfinite(ratio) or ratio > best[tag][0]:
                    best[tag] = (ratio, (r, t))
    return best


def check_prop_bounds(
    which: Proposition | str,
    e: ExponentSet,
    nodes: int = 10,
    T: float | None = None,
    level: int = DEFAULT_LEVEL,
    etas: tuple[float, ...] = ETAS,
) -> list[PropBoundEntry]:
    """Sup ratios of I_k(Phi) to the asserted bounds (C = 1) on Omega_T.

    Each entry is computed on a ``nodes`` x ``nodes`` grid, on the 2x refined
    grid, and with the tanh-sinh level raised by one; the drift between them
    measures stability.
    """
    prop = Proposition(which)
    T = 20 * e.k if T is None else T
    tags = prop.tags
    out = []
    for integral in prop.integrals:
        need = integral > 1
        coarse = omega_grid(T, e.k, nodes, need)
        fine = omega_grid(T, e.k, 2 * nodes - 1, need)
        for eta in etas:
            base = _sup_ratios(integral, e, tags, T, coarse, eta, level)
            ref = _sup_ratios(integral, e, tags, T, fine, eta, level)
            quad = _sup_ratios(integral, e, tags, T, coarse, eta, level + 1)
            for tag in tags:
                out.append(
                    PropBoundEntry(
                        check_id=f"{prop.value}:I{integral}:{tag}:eta={eta:g}",
                        tag=tag,
                        integral=integral,
                        eta=eta,
                        sup_ratio=base[tag][0],
                        sup_ratio_fine=ref[tag][0],
                        sup_ratio_quad=quad[tag][0],
                        argmax=base[tag][1],
                    )
                )
    return out


def empirical_C(entries: list[PropBoundEntry]) -> float:
    """Largest sup ratio across entries: a usable constant C for the calibration."""
    return float(max(max(x.sup_ratio, x.sup_ratio_fine, x.sup_ratio_quad) for x in entries))


# ---------------------------------------------------------------------------
# beta-integral lemmas


class LemmaVariant(str, Enum):
    POWER = "PowerLaw"
    LOG = "LogLaw"


def e_tilde(k: float, a: float, l: float) -> float:
    x = (a + 2 * k) / k
    if l > 1:
        return 1.0
    if l == 1:
        return math.log(x)
    return x ** (1 - l)


def beta_lemma_lhs(variant: LemmaVariant | str, k: float, a: float, l: float, h: float) -> float:
    variant = LemmaVariant(variant)
    if not a > -k:
        raise ValueError("need a > -k")
    if variant is LemmaVariant.POWER:
        f = lambda b: ((b + 2 * k) / k) ** (-l)  # noqa: E731
    else:
        f = lambda b: ((b + 2 * k) / k) ** (-1) * math.log(3 * (b + 2 * k) / k) ** (-l)  # noqa: E731
    # (a - beta)^(-h) carried by the algebraic weight
    val, _ = integrate.quad(f, -k, a, weight="alg", wvar=(0.0, -h), epsabs=0.0, epsrel=1e-11, limit=400)
    return val * k**h


def beta_lemma_rhs(variant: LemmaVariant | str, k: float, a: float, l: float, h: float) -> float:
    variant = LemmaVariant(variant)
    x = (a + 2 * k) / k
    if variant is LemmaVariant.POWER:
        return k * x ** (-h) * e_tilde(k, a, l)
    return k * x ** (-h) * math.log(3 * x) ** (1 - l)


def check_beta_lemma(variant: LemmaVariant | str, k: float, a: float, l: float, h: float) -> float:
    """Left side over right side (C = 1) of the beta-integral lemma.

    PowerLaw needs l > 0, 0 < h < 1; LogLaw needs 0 < l < 1, 0 < h < 1.
    """
    variant = LemmaVariant(variant)
    if not 0 < h < 1:
        raise ValueError("need 0 < h < 1")
    if variant is LemmaVariant.POWER and not l > 0:
        raise ValueError("PowerLaw needs l > 0")
    if variant is LemmaVariant.LOG and not 0 < l < 1:
        raise ValueError("LogLaw needs 0 < l < 1")
    return beta_lemma_lhs(variant, k, a, l, h) / beta_lemma_rhs(variant, k, a, l, h)


# ---------------------------------------------------------------------------
# exponent identities


@dataclass(frozen=True)
class IdentityReport:
    p: float
    q: float
    n: int
    mu_range: bool
    nu_range: bool
    residual_1_p_mu: float
    residual_1_p_nu: float
    residual_513: float
    sign_513: bool
    residual_514: float

    def ok(self, tol: float = 1e-12) -> bool:
        return (
            self.mu_range
            and self.nu_range
            and self.sign_513
            and max(self.residual_1_p_mu, self.residual_1_p_nu, self.residual_513, self.residual_514) <= tol
        )


def check_exponent_identities(e: ExponentSet) -> IdentityReport:
    """Residuals of the mu/nu identities at (p, q, n) of ``e``.

    mu must lie in (0, 1/p), closing to mu = 1/p exactly when F = 0.
    """
    p, q, m = e.p, e.q, e.m
    F = critical_exponent_F(p, q, e.n) if not e.branch.is_critical else 0.0
    mu, nu = e.mu, e.nu
    mu_range = 0 < mu < 1 / p if F > 0 else (0 < mu and abs(mu - 1 / p) <= 1e-12)
    nu_range = 0 < nu < 1 / p
    lhs513 = m + 1.5 - (m + 0.5) * q + mu
    rhs513 = (p - q) * (p * q + 1) / (p * (p * q - 1))
    lhs514 = -((m + 0.5) * p - (m + 1.5)) * q + m + 2.5 - (m + 0.5) * q
    rhs514 = -mu + q * (p - 1) * F
    return IdentityReport(
        p,
        q,
        e.n,
        bool(mu_range),
        bool(nu_range),
        abs((1 - p * mu) - p * (q - 1) * F),
        abs((1 - p * nu) - (q - 1) / (p * q - 1)),
        abs(lhs513 - rhs513),
        bool(rhs513 <= 1e-15),
        abs(lhs514 - rhs514),
    )


def strip_samples(n: int, count: int, seed: int = 0, k: float = 1.5) -> list[ExponentSet]:
    """Random (p <= q) in the strip with F >= 0 (rejection sampling, fixed seed)."""
    lo, hi = theorem_strip(n)
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        p, q = np.sort(rng.uniform(lo, hi, 2))
        if p <= lo or q >= hi:
            continue
        e = derive(float(p), float(q), n, k)
        if e.F >= 0 and e.branch is Branch.SUPERCRITICAL:
            out.append(e)
    return out
