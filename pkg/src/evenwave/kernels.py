"""Kernels of the even-dimensional radial representation formula.

H_j is obtained from (r^2 - (rho - t)^2)^(m - 1/2) by applying the operator
f -> D_rho(-f / (2 rho)) j times.  It is stored exactly as a sum of terms

    coeff * r^s * rho^e * (rho - t)^d * Q^alpha,   Q = r^2 - (rho - t)^2,

with d in {0, 1} (any (rho - t)^2 is rewritten as r^2 - Q).  The kernels are

    K_j(lam, r, t)       = int_lam^{t+r}   H_j(rho) / sqrt(rho^2 - lam^2) drho,
    Ktilde_j(lam, r, t)  = int_{t-r}^{t+r} H_j(rho) / sqrt(rho^2 - lam^2) drho.

Numerically every term is written in a normalized variable x in (0, 1) in
which the singular endpoint factors x^a (1 - x)^b no longer depend on
(lam, r, t).  All remaining factors are powers of expressions affine in
(lam, r, t), so first and second derivatives are exact products.  The lower
end is graded with x = c sinh^2(xi), which also absorbs the nearby branch
point at rho = t - r (or rho = lam for Ktilde); the upper end uses
1 - x = w^2.  Both maps turn the integrand into a smooth function.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable

import numpy as np

from evenwave.quadrature import DEFAULT_QUAD, QuadratureError, QuadratureSpec, unit_rule

K = "K"
KTILDE = "Ktilde"
VARIANTS = (K, KTILDE)

# derivative axis order used everywhere in this module
AXES = ("lam", "r", "t")


class KernelDomainError(ValueError):
    """Query outside the validity interval of the requested kernel."""


@dataclass(frozen=True)
class KernelTerm:
    coeff: Fraction
    r_exp: int
    rho_exp: int
    lin_exp: int
    quad_exp: Fraction


@dataclass(frozen=True)
class KernelTermSum:
    """Exact term list for H_j."""

    m: int
    j: int
    terms: tuple[KernelTerm, ...]

    def evaluate(self, rho, r, t):
        rho, r, t = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (rho, r, t)))
        Q = r * r - (rho - t) ** 2
        out = np.zeros(rho.shape)
        for term in self.terms:
            out = out + (
                float(term.coeff)
                * r ** term.r_exp
                * rho ** term.rho_exp
                * (rho - t) ** term.lin_exp
                * Q ** float(term.quad_exp)
            )
        return out

    @property
    def quad_exps(self) -> list[Fraction]:
        return sorted({term.quad_exp for term in self.terms}, reverse=True)


def _apply_operator(terms: dict) -> dict:
    """One application of f -> D_rho(-f/(2 rho)) to a term dictionary."""
    out: dict = {}

    def add(key, value):
        if value == 0:
            return
        out[key] = out.get(key, Fraction(0)) + value
        if out[key] == 0:
            del out[key]

    for (s, e, d, a), c in terms.items():
        half = -c / 2
        # derivative of rho^(e-1)
        add((s, e - 2, d, a), half * (e - 1))
        # derivative of (rho - t)^d
        if d == 1:
            add((s, e - 1, 0, a), half)
        # derivative of Q^a brings -2 a (rho - t) Q^(a-1)
        if a != 0:
            if d == 0:
                add((s, e - 1, 1, a - 1), half * (-2 * a))
            else:
                add((s + 2, e - 1, 0, a - 1), half * (-2 * a))
                add((s, e - 1, 0, a), half * (2 * a))
    return out


@lru_cache(maxsize=None)
def build_H(j: int, m: int) -> KernelTermSum:
    """Exact term sum of H_j for dimension n = 2m + 2."""
    if m < 2:
        raise KernelDomainError("only m >= 2 (n >= 6) is supported")
    if not 0 <= j <= m:
        raise KernelDomainError(f"H_j is used only for 0 <= j <= m, got j={j}, m={m}")
    terms = {(0, 0, 0, Fraction(2 * m - 1, 2)): Fraction(1)}
    for _ in range(j):
        terms = _apply_operator(terms)
    ordered = sorted(terms.items(), key=lambda kv: (-kv[0][3], kv[0]))
    return KernelTermSum(
        m=m,
        j=j,
        terms=tuple(KernelTerm(c, s, e, d, a) for (s, e, d, a), c in ordered),
    )


@dataclass(frozen=True)
class KernelQuery:
    lam: float
    r: float
    t: float
    j: int
    variant: str = K


# ---------------------------------------------------------------------------
# product rule for powers of affine bases


def _accumulate(state, base, grad, power, order):
    """Multiply the running (value, gradient, hessian) by base**power."""
    if power == 0:
        return state
    val, dval, hval = state
    v = base**power
    if order == 0:
        return val * v, None, None
    pm1 = power - 1
    dfac = power * (base**pm1 if pm1 != 0 else 1.0)
    d = dfac[..., None] * grad if np.ndim(dfac) else dfac * grad
    new_val = val * v
    new_d = val[..., None] * d + v[..., None] * dval
    if order == 1:
        return new_val, new_d, None
    if power == 1:
        h = 0.0
    else:
        pm2 = power - 2
        hfac = power * pm1 * (base**pm2 if pm2 != 0 else np.ones_like(base))
        h = hfac[..., None, None] * grad[..., :, None] * grad[..., None, :]
    new_h = (
        val[..., None, None] * h
        + v[..., None, None] * hval
        + dval[..., :, None] * d[..., None, :]
        + d[..., :, None] * dval[..., None, :]
    )
    return new_val, new_d, new_h


def _grad(*components):
    return np.stack(np.broadcast_arrays(*components), axis=-1)


# ---------------------------------------------------------------------------
# node layout


def _layout(c0, level, base_nodes, rule):
    """Lower (graded) and upper (sqrt) nodes in x for every query.

    Returns a dict with arrays of shape (Q, N): x, one_minus_x, the Jacobian
    pieces needed for the endpoint weights, and a mask of lower nodes.
    """
    Q = c0.shape[0]
    xi_max = np.arcsinh(np.sqrt(0.5 / c0))
    panels = int(np.ceil(max(float(xi_max.max()), 1e-3))) * 2**level
    u, w = unit_rule(base_nodes, rule)
    pos = ((np.arange(panels)[:, None] + u[None, :]) / panels).ravel()
    wts = np.tile(w / panels, panels)
    xi = xi_max[:, None] * pos[None, :]
    w_xi = xi_max[:, None] * wts[None, :]
    sh = np.sinh(xi)
    ch = np.cosh(xi)
    x_lo = c0[:, None] * sh * sh
    up_panels = 2**level
    pos_u = ((np.arange(up_panels)[:, None] + u[None, :]) / up_panels).ravel()
    wts_u = np.tile(w / up_panels, up_panels)
    half = np.sqrt(0.5)
    wv = half * pos_u
    x_up = 1.0 - wv * wv
    n_lo = xi.shape[1]
    n_up = wv.size
    x = np.concatenate([x_lo, np.broadcast_to(x_up, (Q, n_up))], axis=1)
    omx = np.concatenate([1.0 - x_lo, np.broadcast_to(wv * wv, (Q, n_up))], axis=1)
    return {
        "x": x,
        "omx": omx,
        "n_lo": n_lo,
        "c0": c0,
        "sh": sh,
        "ch": ch,
        "w_xi": w_xi,
        "wv": wv,
        "w_up": half * wts_u,
    }


def _endpoint_weights(lay, lo_exp: float, hi_exp: float):
    """Quadrature weights including x^lo_exp (1-x)^hi_exp, shape (Q, N)."""
    c0 = lay["c0"][:, None]
    sh, ch = lay["sh"], lay["ch"]
    # x^a dx on the graded part: 2 c0^(a+1) sinh^(2a+1) cosh dxi
    lo_pow = 2 * lo_exp + 1
    w_lo = 2.0 * c0 ** (lo_exp + 1) * (sh**lo_pow if lo_pow != 0 else 1.0) * ch * lay["w_xi"]
    w_lo = w_lo * (1.0 - c0 * sh * sh) ** hi_exp
    # (1-x)^b dx on the upper part: 2 w^(2b+1) dw
    wv = lay["wv"]
    hi_pow = 2 * hi_exp + 1
    w_up = 2.0 * (wv**hi_pow if hi_pow != 0 else 1.0) * lay["w_up"]
    x_up = 1.0 - wv * wv
    w_up = w_up * x_up**lo_exp
    Q = c0.shape[0]
    return np.concatenate([w_lo, np.broadcast_to(w_up, (Q, wv.size))], axis=1)


# ---------------------------------------------------------------------------
# integrand assembly


def _bases(variant, lam, r, t, lay):
    """Affine bases and their (lam, r, t) gradients at every node."""
    x = lay["x"]
    omx = lay["omx"]
    n_lo = lay["n_lo"]
    lam = lam[:, None]
    r = r[:, None]
    t = t[:, None]
    lower = np.zeros(x.shape, dtype=bool)
    lower[:, :n_lo] = True
    zero = np.zeros_like(x)
    one = np.ones_like(x)
    if variant == K:
        ell = t + r - lam
        delta = lam - t + r
        rho = np.where(lower, lam + ell * x, (t + r) - ell * omx)
        rho_t = np.where(lower, (lam - t) + ell * x, r - ell * omx)
        near = np.where(lower, delta + ell * x, 2.0 * r - ell * omx)
        plus = np.where(lower, 2.0 * lam + ell * x, lam + t + r - ell * omx)
        bases = {
            "r": (r * one, _grad(zero, one, zero)),
            "rho": (rho, _grad(omx, x, x)),
            "rho_t": (rho_t, _grad(omx, x, -omx)),
            "scale": (ell * one, _grad(-one, one, one)),
            "near": (near, _grad(omx, 1.0 + x, -omx)),
            "plus": (plus, _grad(2.0 - x, x, x)),
        }
    else:
        two_r = 2.0 * r
        rho = np.where(lower, (t - r) + two_r * x, (t + r) - two_r * omx)
        rho_t = np.where(lower, -r + two_r * x, r - two_r * omx)
        near = np.where(lower, (t - r - lam) + two_r * x, (t + r - lam) - two_r * omx)
        plus = np.where(lower, (t - r + lam) + two_r * x, (t + r + lam) - two_r * omx)
        s = 2.0 * x - 1.0
        bases = {
            "r": (r * one, _grad(zero, one, zero)),
            "rho": (rho, _grad(zero, s, one)),
            "rho_t": (rho_t, _grad(zero, s, zero)),
            "scale": (two_r * one, _grad(zero, 2.0 * one, zero)),
            "near": (near, _grad(-one, s, one)),
            "plus": (plus, _grad(one, s, one)),
        }
    return bases


def _term_powers(variant, term):
    a = term.quad_exp
    if variant == K:
        return {
            "r": term.r_exp,
            "rho": term.rho_exp,
            "rho_t": term.lin_exp,
            "scale": int(a + Fraction(1, 2)),
            "near": float(a),
            "plus": -0.5,
        }, (-0.5, float(a))
    return {
        "r": term.r_exp,
        "rho": term.rho_exp,
        "rho_t": term.lin_exp,
        "scale": int(2 * a + 1),
        "near": -0.5,
        "plus": -0.5,
    }, (float(a), float(a))


def _grading(variant, lam, r, t):
    if variant == K:
        scale = t + r - lam
        delta = lam - t + r
        s0 = np.minimum(delta, lam)
    else:
        scale = 2.0 * r
        s0 = t - r - lam
    with np.errstate(divide="ignore", invalid="ignore"):
        c0 = s0 / scale
    bad = ~np.isfinite(c0) | (c0 <= 0) | (c0 >= 0.5)
    return np.where(bad, 0.5, c0)


def _integrate_level(hsum, variant, lam, r, t, order, level, base_nodes, rule):
    c0 = _grading(variant, lam, r, t)
    lay = _layout(c0, level, base_nodes, rule)
    bases = _bases(variant, lam, r, t, lay)
    Q, N = lay["x"].shape
    total = [np.zeros(Q), np.zeros((Q, 3)), np.zeros((Q, 3, 3))]
    mag = np.zeros(Q)
    weight_cache: dict = {}
    for term in hsum.terms:
        powers, (lo_exp, hi_exp) = _term_powers(variant, term)
        key = (lo_exp, hi_exp)
        if key not in weight_cache:
            weight_cache[key] = _endpoint_weights(lay, lo_exp, hi_exp)
        wts = weight_cache[key]
        state = (np.full((Q, N), float(term.coeff)), np.zeros((Q, N, 3)), np.zeros((Q, N, 3, 3)))
        if order == 0:
            state = (state[0], None, None)
        elif order == 1:
            state = (state[0], state[1], None)
        for name, p in powers.items():
            base, grad = bases[name]
            state = _accumulate(state, base, grad, p, order)
        total[0] += np.einsum("qn,qn->q", wts, state[0])
        mag += np.einsum("qn,qn->q", wts, np.abs(state[0]))
        if order >= 1:
            total[1] += np.einsum("qn,qni->qi", wts, state[1])
        if order >= 2:
            total[2] += np.einsum("qn,qnij->qij", wts, state[2])
    return total, mag


def _check_domain(variant, lam, r, t, slack=1e-12):
    if np.any(r <= 0):
        raise KernelDomainError("r must be positive")
    if np.any(t < 0) or np.any(lam < 0):
        raise KernelDomainError("t and lam must be nonnegative")
    b = t + r
    if variant == K:
        bad = (lam < np.abs(t - r) - slack * b) | (lam > b * (1 + slack))
    elif variant == KTILDE:
        bad = (lam > (t - r) + slack * b) | (t - r <= 0)
    else:
        raise KernelDomainError(f"unknown variant {variant!r}")
    if np.any(bad):
        raise KernelDomainError(f"query outside the {variant} validity interval")


def eval_K(
    m: int,
    j: int,
    lam,
    r,
    t,
    variant: str = K,
    quad: QuadratureSpec = DEFAULT_QUAD,
    order: int = 0,
    adaptive: bool = True,
    chunk: int = 512,
):
    """Evaluate K_j (or Ktilde_j) and optionally its derivatives.

    Parameters
    ----------
    lam, r, t : array_like
        Broadcastable query coordinates.
    order : {0, 1, 2}
        0 returns values; 1 also returns the gradient in (lam, r, t) as the
        last axis; 2 additionally returns the 3x3 Hessian.
    adaptive : bool
        When False a single fixed level is used (no error estimate); this is
        the fast path for building operator tables.

    Returns
    -------
    value or (value, grad) or (value, grad, hess)
    """
    lam, r, t = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (lam, r, t)))
    shape = lam.shape
    lam_f, r_f, t_f = (v.ravel() for v in (lam, r, t))
    _check_domain(variant, lam_f, r_f, t_f)
    hsum = build_H(j, m)
    nq = lam_f.size
    val = np.empty(nq)
    grad = np.empty((nq, 3))
    hess = np.empty((nq, 3, 3))
    for start in range(0, nq, chunk):
        sl = slice(start, min(start + chunk, nq))
        res = _eval_chunk(hsum, variant, lam_f[sl], r_f[sl], t_f[sl], order, quad, adaptive)
        val[sl] = res[0]
        if order >= 1:
            grad[sl] = res[1]
        if order >= 2:
            hess[sl] = res[2]
    if order == 0:
        return val.reshape(shape)
    if order == 1:
        return val.reshape(shape), grad.reshape(shape + (3,))
    return val.reshape(shape), grad.reshape(shape + (3,)), hess.reshape(shape + (3, 3))


# a divergent query stops refining here instead of exhausting memory
_MAX_NODES = 2**22


def _eval_chunk(hsum, variant, lam, r, t, order, quad, adaptive):
    base = quad.base_nodes
    if not adaptive:
        total, _ = _integrate_level(hsum, variant, lam, r, t, order, 0, base, quad.rule)
        return total
    prev, _ = _integrate_level(hsum, variant, lam, r, t, order, 0, base, quad.rule)
    result = [p.copy() for p in prev]
    todo = np.arange(lam.size)
    for level in range(1, quad.max_levels + 1):
        if todo.size * base * 2**level > _MAX_NODES:
            break
        cur, mag = _integrate_level(
            hsum, variant, lam[todo], r[todo], t[todo], order, level, base, quad.rule
        )
        err = np.abs(cur[0] - prev[0])
        scale = np.maximum(np.abs(cur[0]), mag)
        if order >= 1:
            err = np.maximum(err, np.abs(cur[1] - prev[1]).max(axis=-1))
            scale = np.maximum(scale, np.abs(cur[1]).max(axis=-1))
        if order >= 2:
            err = np.maximum(err, np.abs(cur[2] - prev[2]).reshape(len(todo), -1).max(axis=-1))
            scale = np.maximum(scale, np.abs(cur[2]).reshape(len(todo), -1).max(axis=-1))
        for i in range(order + 1):
            result[i][todo] = cur[i]
        done = err <= quad.tol * np.maximum(scale, 1e-300)
        if np.all(done):
            return result
        keep = ~done
        todo = todo[keep]
        prev = [c[keep] for c in cur]
    raise QuadratureError(
        f"kernel quadrature did not reach tol={quad.tol} within {quad.max_levels} levels or {_MAX_NODES} nodes"
    )


def eval_query(query: KernelQuery, m: int, quad: QuadratureSpec = DEFAULT_QUAD) -> float:
    return float(eval_K(m, query.j, query.lam, query.r, query.t, query.variant, quad))


def check_recurrence(
    m: int,
    j: int,
    lam: float,
    r: float,
    t: float,
    h: float,
    variant: str = K,
    quad: QuadratureSpec = DEFAULT_QUAD,
) -> float:
    """Relative residual of K_j = -D_{lam^2} K_{j-1} with a centered difference.

    The step in the lam^2 variable is h * lam^2, so the truncation error is
    O(h^2).
    """
    if not 1 <= j <= m:
        raise KernelDomainError("recurrence needs 1 <= j <= m")
    step = h * lam * lam
    up = np.sqrt(lam * lam + step)
    dn = np.sqrt(lam * lam - step)
    k_j = float(eval_K(m, j, lam, r, t, variant, quad))
    k_up, k_dn = eval_K(m, j - 1, np.array([up, dn]), r, t, variant, quad)
    approx = -(k_up - k_dn) / (2.0 * step)
    return abs(k_j - approx) / abs(k_j)


def edge_ratio(m: int, j: int, r: float, t: float, offset: float = 1e-6, quad: QuadratureSpec = DEFAULT_QUAD) -> float:
    """|K_j((t + r)(1 - offset), r, t)| / r^(2m - j): vanishing at the outer edge."""
    lam = (t + r) * (1.0 - offset)
    return abs(float(eval_K(m, j, lam, r, t, K, quad))) / r ** (2 * m - j)


def seam_residual(m: int, j: int, r: float, t: float, quad: QuadratureSpec = DEFAULT_QUAD) -> float:
    """|K_j - Ktilde_j| / |K_j| at lam = t - r (t > r): continuity across the seam.

    Only j < m: K_m grows like log(1 / |lam - (t - r)|) at the seam, so it has
    no value there; compare one-sided values at a small offset instead.
    """
    if not t > r:
        raise KernelDomainError("the seam lam = t - r needs t > r")
    if j >= m:
        raise KernelDomainError(f"K_{j} is log-singular at the seam for m = {m}")
    lam = t - r
    a = float(eval_K(m, j, lam, r, t, K, quad))
    b = float(eval_K(m, j, lam, r, t, KTILDE, quad))
    return abs(a - b) / max(abs(a), abs(b), 1e-300)


def recurrence_order(m: int, j: int, lam: float, r: float, t: float, h: float = 2e-2, variant: str = K, quad: QuadratureSpec = DEFAULT_QUAD) -> float:
    """Observed convergence order of the recurrence residual between steps h and h/2.

    The default h = 2e-2 keeps both residuals well above the rounding floor of
    the kernel quadrature; at smaller steps the ratio measures noise.
    """
    coarse = check_recurrence(m, j, lam, r, t, h, variant, quad)
    fine = check_recurrence(m, j, lam, r, t, h / 2, variant, quad)
    if fine == 0:
        return math.inf
    return math.log2(coarse / fine)


# ---------------------------------------------------------------------------
# lemma bounds


@dataclass(frozen=True)
class BoundReport:
    """Sup of |quantity| / (bound with C = 1) over a grid and its refinement."""

    name: str
    sup_ratio: float
    sup_ratio_refined: float
    points: int

    @property
    def drift(self) -> float:
        if self.sup_ratio_refined == 0:
            return 0.0
        return abs(self.sup_ratio_refined - self.sup_ratio) / abs(self.sup_ratio_refined)

    @property
    def finite(self) -> bool:
        return bool(np.isfinite(self.sup_ratio) and np.isfinite(self.sup_ratio_refined))

    @property
    def stable(self) -> bool:
        return self.finite and self.drift < 0.10

    @property
    def passed(self) -> bool:
        return self.stable


LEMMAS = ("interior", "interior_tilde", "outside", "edge")


def lemma_bound(lemma: str, m: int, j: int, lam, r, t, eta: float, n_deriv: int = 0):
    """Right-hand side (C = 1) of the kernel magnitude lemmas.

    interior        K_j, |t-r| < lam < t+r:  r^(2m-j-|a|+eta-1/2) lam^(-j-eta) (lam-t+r)^(-1/2)
    interior_tilde  Ktilde_j, 0 < lam < t-r: r^(2m-j-|a|+eta-1/2) (t-r)^(-j-eta) (t-r-lam)^(-1/2)
    outside         K_m for r > t:           r^(m-1/2+eta) lam^(-m-|a|-1/2-eta)
    edge            K_m at lam = r+t, t < r: r^(m-1/2+eta) lam^(-m-1/2-eta)
    """
    lam, r, t = (np.asarray(v, dtype=float) for v in (lam, r, t))
    if lemma == "interior":
        return r ** (2 * m - j - n_deriv + eta - 0.5) * lam ** (-j - eta) * (lam - t + r) ** -0.5
    if lemma == "interior_tilde":
        return r ** (2 * m - j - n_deriv + eta - 0.5) * (t - r) ** (-j - eta) * (t - r - lam) ** -0.5
    if lemma == "outside":
        return r ** (m - 0.5 + eta) * lam ** (-m - n_deriv - 0.5 - eta)
    if lemma == "edge":
        return r ** (m - 0.5 + eta) * lam ** (-m - 0.5 - eta)
    raise ValueError(f"unknown lemma {lemma!r}")


def lemma_grid(lemma: str, nodes: int, span: float = 4.0) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Nested sample grid satisfying the hypotheses of ``lemma``.

    A grid with 2*nodes-1 points per axis contains the grid with ``nodes``
    points, so the refined sup can only grow.
    """
    s = np.linspace(0.0, 1.0, nodes + 2)[1:-1]
    if lemma in ("interior", "interior_tilde"):
        t = span * s
        r = span * s
        f = s
        T, R, Fr = np.meshgrid(t, r, f, indexing="ij")
        if lemma == "interior":
            lo = np.abs(T - R)
            lam = lo + Fr * (T + R - lo)
            keep = lam > 0
        else:
            keep = T > R
            lam = Fr * (T - R)
        return lam[keep], R[keep], T[keep]
    if lemma == "outside":
        r = span * s
        tf = s
        f = s
        R, TF, Fr = np.meshgrid(r, tf, f, indexing="ij")
        T = TF * R
        lam = (R - T) + Fr * 2 * T
        return lam.ravel(), R.ravel(), T.ravel()
    if lemma == "edge":
        r = span * s
        tf = s
        R, TF = np.meshgrid(r, tf, indexing="ij")
        T = TF * R
        return (R + T).ravel(), R.ravel(), T.ravel()
    raise ValueError(f"unknown lemma {lemma!r}")


def _deriv_component(value, grad, hess, alpha: tuple[int, int]):
    """Pick D_r^a D_t^b from the (lam, r, t) derivative arrays."""
    a, b = alpha
    if a + b == 0:
        return value
    if a + b == 1:
        return grad[..., 1] if a == 1 else grad[..., 2]
    idx = [1] * a + [2] * b
    return hess[..., idx[0], idx[1]]


def check_bounds(
    m: int,
    j: int,
    lemma: str,
    eta: float = 0.0,
    alpha: tuple[int, int] = (0, 0),
    nodes: int = 10,
    quad: QuadratureSpec = DEFAULT_QUAD,
) -> BoundReport:
    """Sup of |D^alpha K_j| / bound over a grid and over its 2x refinement."""
    variant = KTILDE if lemma == "interior_tilde" else K
    order = sum(alpha)
    ratios = []
    npts = 0
    for nn in (nodes, 2 * nodes + 1):
        lam, r, t = lemma_grid(lemma, nn)
        res = eval_K(m, j, lam, r, t, variant, quad, order=max(order, 0), adaptive=True)
        if order == 0:
            val = res
        else:
            val = _deriv_component(*(list(res) + [None] * (3 - len(res))), alpha)
        bound = lemma_bound(lemma, m, j, lam, r, t, eta, order)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.abs(val) / bound
        ratios.append(float(np.nanmax(ratio)))
        npts = lam.size
    name = f"{lemma}:m={m},j={j},eta={eta},alpha={alpha}"
    return BoundReport(name, ratios[0], ratios[1], npts)


def sample_queries(
    variant: str, count: int, rng: np.random.Generator, span: float = 4.0
) -> list[tuple[float, float, float]]:
    """Random admissible (lam, r, t) triples for the given variant."""
    out = []
    while len(out) < count:
        r, t = rng.uniform(0.1 * span / 4, span, size=2)
        if variant == K:
            lo, hi = abs(t - r), t + r
        else:
            if t - r <= 0.05:
                continue
            lo, hi = 0.0, t - r
        lam = rng.uniform(lo, hi)
        if lam <= 0:
            continue
        out.append((lam, r, t))
    return out


def sample_recurrence_queries(
    variant: str, count: int, rng: np.random.Generator, span: float = 4.0, margin: float = 0.05, lam_min: float = 0.1
) -> list[tuple[float, float, float]]:
    """Admissible points for the finite-difference recurrence check.

    The centered stencil in lam^2 has half-width ~ h lam / 2 in lam, so lam
    must stay ``margin * lam`` away from the singular endpoints (|t - r| and
    t + r for K, t - r for Ktilde) for the stencil to resolve the kernel;
    ``lam_min`` keeps the absolute step h lam^2 above rounding noise.
    """
    out = []
    while len(out) < count:
        r, t = rng.uniform(0.1 * span / 4, span, size=2)
        lo, hi = (abs(t - r), t + r) if variant == K else (0.0, t - r)
        if hi <= lo:
            continue
        lam = rng.uniform(lo, hi)
        dist = hi - lam if variant == KTILDE else min(lam - lo, hi - lam)
        if lam < lam_min or dist < margin * lam:
            continue
        out.append((lam, r, t))
    return out


def iter_terms(j: int, m: int) -> Iterable[KernelTerm]:
    return iter(build_H(j, m).terms)
