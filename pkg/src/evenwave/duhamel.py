"""Duhamel operator L(G)(r, t) = c_n^-1 int_0^t Theta(G(., tau))(r, t - tau) dtau.

Two evaluation paths are provided.

* ``apply_L`` / ``apply_L_deriv`` integrate pointwise: Gauss-Legendre in
  tau around ``free_wave.theta``.  Accurate, used as the reference.
* ``OperatorTable`` precomputes Theta (and its r and t derivatives) of
  every cubic-spline cardinal function on a uniform (r, t) grid.  Because
  the kernel only depends on the lag t - tau, one table per lag serves all
  times, and L(G) on the whole grid becomes a sum of small matrix products.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import sparse
from scipy.interpolate import CubicSpline

from evenwave.free_wave import OUTER_LEVEL, RadialProfile, c_n, theta, theta_alt, theta_and_gradient
from evenwave.kernels import K, KTILDE, eval_K
from evenwave.quadrature import QuadratureSpec, tanh_sinh_rule, unit_rule

TABLE_QUAD = QuadratureSpec(base_nodes=12)


@dataclass(frozen=True)
class SourceField:
    """Source G(lam, tau) with lam-derivative, supported in lam <= tau + k.

    ``radius`` optionally gives a tighter support radius at time tau; the
    lam quadratures are cut there, so kinks at the support edge never sit
    inside an integration range.
    """

    value: Callable[[np.ndarray, float], np.ndarray]
    d_lam: Callable[[np.ndarray, float], np.ndarray]
    k: float
    radius: Callable[[float], float] | None = None

    def support(self, tau: float) -> float:
        cone = tau + self.k
        return cone if self.radius is None else min(cone, float(self.radius(tau)))

    def profile(self, tau: float) -> RadialProfile:
        supp = self.support(tau)
        v = lambda x: np.where(np.asarray(x) <= supp, self.value(np.asarray(x, dtype=float), tau), 0.0)  # noqa: E731
        d = lambda x: np.where(np.asarray(x) <= supp, self.d_lam(np.asarray(x, dtype=float), tau), 0.0)  # noqa: E731
        zero = lambda x: np.zeros_like(np.asarray(x, dtype=float))  # noqa: E731
        return RadialProfile(supp, v, d, zero, smoothness=1, name="source")


def zero_source(k: float) -> SourceField:
    z = lambda x, tau: np.zeros_like(np.asarray(x, dtype=float))  # noqa: E731
    return SourceField(z, z, k)


TAU_NODES = 24


def _tau_rule(t, nodes):
    x, w = unit_rule(nodes)
    return t * x, t * w


def _as_r(r):
    r = np.atleast_1d(np.asarray(r, dtype=float))
    if np.any(r <= 0):
        raise ValueError("r must be positive")
    return r


def apply_L(G: SourceField, r, t: float, n: int, tau_nodes: int = TAU_NODES, level: int = OUTER_LEVEL):
    """L(G)(r, t) at one time for an array of radii, through the K_m form of Theta.

    For sources smooth in tau the integrand Theta(G(., tau))(r, t - tau) is
    smooth in tau (it is c_n times a free wave in the lag), so a fixed
    Gauss-Legendre rule in tau converges quickly.
    """
    scalar = np.ndim(r) == 0
    r = _as_r(r)
    out = np.zeros(r.size)
    live = r <= t + G.k
    if t > 0 and np.any(live):
        for tau, wt in zip(*_tau_rule(t, tau_nodes)):
            out[live] += wt * theta(G.profile(tau), r[live], np.full(int(live.sum()), t - tau), n, adaptive=False, level=level)
    out /= c_n(n)
    return float(out[0]) if scalar else out


def apply_L_deriv(G: SourceField, r, t: float, n: int, i: int = 1, tau_nodes: int = TAU_NODES, level: int = OUTER_LEVEL):
    """D_r^i L(G)(r, t) through the once-integrated forms (K_{m-1} kernels).

    Only D_lam(lam^(2m) G) enters.  ``i = 0`` returns L(G) computed from the
    integrated-by-parts representation, an independent route to the value
    of ``apply_L``.
    """
    if i not in (0, 1):
        raise ValueError("i must be 0 or 1")
    scalar = np.ndim(r) == 0
    r = _as_r(r)
    out = np.zeros(r.size)
    live = r <= t + G.k
    if t > 0 and np.any(live):
        rl = r[live]
        for tau, wt in zip(*_tau_rule(t, tau_nodes)):
            prof = G.profile(tau)
            lag = np.full(rl.size, t - tau)
            if i == 0:
                out[live] += wt * theta_alt(prof, rl, lag, n, adaptive=False, level=level)
            else:
                out[live] += wt * theta_and_gradient(prof, rl, lag, n, adaptive=False, level=level)[1]
    out /= c_n(n)
    return float(out[0]) if scalar else out


# ---------------------------------------------------------------------------
# grid operator


@dataclass(frozen=True)
class SpacetimeGrid:
    """Uniform grid r_a = a h (a = 1..nr), t_l = l dt (l = 0..nt)."""

    h: float
    nr: int
    dt: float
    nt: int

    @classmethod
    def covering(cls, T: float, k: float, h: float, dt: float | None = None) -> "SpacetimeGrid":
        dt = h if dt is None else dt
        nr = int(math.ceil((T + k) / h))
        nt = int(round(T / dt))
        return cls(h, nr, T / nt, nt)

    @property
    def r(self) -> np.ndarray:
        return self.h * np.arange(1, self.nr + 1)

    @property
    def t(self) -> np.ndarray:
        return self.dt * np.arange(self.nt + 1)

    @property
    def T(self) -> float:
        return self.dt * self.nt

    def mesh(self):
        """(t, r) arrays of shape (nt + 1, nr)."""
        return np.meshgrid(self.t, self.r, indexing="ij")


def spline_basis(grid: SpacetimeGrid) -> CubicSpline:
    """Cubic spline mapping samples at r_1..r_nr to a function of lam >= 0.

    The value at lam = 0 comes from even reflection, (4 g_1 - g_2) / 3, and
    the slope there is clamped to zero.  Evaluating the spline returns the
    (points x nr) matrix of cardinal functions.
    """
    nr = grid.nr
    nodes = grid.h * np.arange(nr + 1)
    ident = np.zeros((nr + 1, nr))
    ident[1:, :] = np.eye(nr)
    ident[0, 0] = 4.0 / 3.0
    if nr > 1:
        ident[0, 1] = -1.0 / 3.0
    return CubicSpline(nodes, ident, bc_type=((1, np.zeros(nr)), "natural"), extrapolate=True)


def _interval_nodes(lo, hi, h, gl_nodes, end_level):
    """Quadrature for int_lo^hi, split at multiples of h.

    The two end pieces carry the (possibly singular) kernel endpoints and
    use a tanh-sinh rule; interior pieces are smooth and use Gauss-Legendre.
    """
    if hi <= lo:
        return np.empty(0), np.empty(0)
    first = math.floor(lo / h) + 1
    last = math.ceil(hi / h) - 1
    cuts = h * np.arange(first, last + 1) if last >= first else np.empty(0)
    edges = np.concatenate(([lo], cuts, [hi]))
    # drop slivers created by rounding
    keep = np.concatenate(([True], np.diff(edges) > 1e-12 * h))
    edges = edges[keep]
    if edges[-1] < hi:
        edges[-1] = hi
    x, xc, w = tanh_sinh_rule(end_level)
    gx, gw = unit_rule(gl_nodes)
    nodes, weights = [], []
    npieces = len(edges) - 1
    for p in range(npieces):
        a, b = edges[p], edges[p + 1]
        width = b - a
        if p == 0 or p == npieces - 1:
            lam = np.where(x < 0.5, a + width * x, b - width * xc)
            wt = width * w
            tiny = np.minimum(x, xc) * width < 64 * np.finfo(float).eps * max(abs(a), abs(b), 1e-300)
            nodes.append(lam[~tiny])
            weights.append(wt[~tiny])
        else:
            nodes.append(a + width * gx)
            weights.append(width * gw)
    return np.concatenate(nodes), np.concatenate(weights)


@dataclass
class OperatorTable:
    """Theta, D_r Theta and D_t Theta of every spline cardinal function.

    Arrays have shape (nr, nt + 1, nr): output radius, lag, basis index.
    """

    n: int
    grid: SpacetimeGrid
    theta: np.ndarray
    d_r: np.ndarray
    d_t: np.ndarray

    @property
    def m(self) -> int:
        return (self.n - 2) // 2

    def free_part(self, f_samples: np.ndarray, g_samples: np.ndarray) -> np.ndarray:
        """(Theta(g) + D_t Theta(f)) / c_n on the grid, shape (nt + 1, nr)."""
        out = np.einsum("ali,i->la", self.theta, g_samples) + np.einsum("ali,i->la", self.d_t, f_samples)
        return out / c_n(self.n)

    def free_part_dr(self, g_samples: np.ndarray) -> np.ndarray:
        """D_r Theta(g) / c_n on the grid (the f part needs second derivatives)."""
        return np.einsum("ali,i->la", self.d_r, g_samples) / c_n(self.n)

    def apply(self, G: np.ndarray, derivative: bool = False) -> np.ndarray:
        """L(G) (or D_r L(G)) on the grid for samples G of shape (nt + 1, nr).

        The tau integral uses the trapezoid rule on the time grid.
        """
        tab = self.d_r if derivative else self.theta
        nt = self.grid.nt
        Gw = np.array(G, dtype=float, copy=True)
        Gw[0] *= 0.5
        out = np.zeros((nt + 1, self.grid.nr))
        for lag in range(1, nt + 1):
            # contribution of source time j = l - lag to output time l
            out[lag:] += Gw[: nt + 1 - lag] @ tab[:, lag, :].T
        return out * self.grid.dt / c_n(self.n)


def _lag_rows(m, grid, s, spline, dspline, gl_nodes, end_level, quad):
    """Rows Theta(S_i), D_r Theta(S_i), D_t Theta(S_i) at lag s for every r_a."""
    r_all = grid.r
    nr = grid.nr
    lam_max = grid.h * nr
    seg_k, seg_kt = [], []
    for a, r in enumerate(r_all):
        lo = abs(s - r)
        hi = min(s + r, lam_max)
        lam, w = _interval_nodes(lo, hi, grid.h, gl_nodes, end_level)
        seg_k.append((a, lam, w))
        if s > r:
            lam2, w2 = _interval_nodes(0.0, min(s - r, lam_max), grid.h, gl_nodes, end_level)
            seg_kt.append((a, lam2, w2))
    th = np.zeros((nr, nr))
    xr = np.zeros((nr, nr))
    xt = np.zeros((nr, nr))

    def accumulate(segments, variant):
        if not segments:
            return
        rows = np.concatenate([np.full(len(lam), a) for a, lam, _ in segments])
        lam = np.concatenate([lam for _, lam, _ in segments])
        w = np.concatenate([w for _, _, w in segments])
        if lam.size == 0:
            return
        r = r_all[rows]
        tt = np.full_like(lam, s)
        km = eval_K(m, m, lam, r, tt, variant, quad, adaptive=False)
        _, grad = eval_K(m, m - 1, lam, r, tt, variant, quad, order=1, adaptive=False)
        basis = spline(lam)
        dbasis = dspline(lam)
        # (lam^(2m) S)' = 2m lam^(2m-1) S + lam^(2m) S'
        dpow = 2 * m * lam[:, None] ** (2 * m - 1) * basis + lam[:, None] ** (2 * m) * dbasis
        scatter = sparse.csr_matrix((np.ones_like(lam), (rows, np.arange(lam.size))), shape=(nr, lam.size))
        th[:] += scatter @ ((w * lam ** (2 * m + 1) * km)[:, None] * basis)
        xr[:] += scatter @ ((w * grad[:, 1])[:, None] * dpow)
        xt[:] += scatter @ ((w * grad[:, 2])[:, None] * dpow)

    accumulate(seg_k, K)
    accumulate(seg_kt, KTILDE)
    # boundary term of the integrated form for s < r
    inside = r_all > s
    if np.any(inside):
        lam_b = r_all[inside] - s
        _, gb = eval_K(m, m - 1, lam_b, r_all[inside], np.full(lam_b.size, s), K, quad, order=1, adaptive=False)
        amp = lam_b[:, None] ** (2 * m) * spline(lam_b)
        xr[inside] += amp * (gb[:, 1] + gb[:, 0])[:, None]
        xt[inside] += amp * (gb[:, 2] - gb[:, 0])[:, None]
    r2m = r_all[:, None] ** (2 * m)
    th /= r2m
    d_r = (xr - 4 * m * r_all[:, None] ** (2 * m - 1) * th) / (2.0 * r2m)
    d_t = xt / (2.0 * r2m)
    return th, d_r, d_t


def build_operator_table(
    n: int,
    grid: SpacetimeGrid,
    gl_nodes: int = 3,
    end_level: int = 2,
    quad: QuadratureSpec = TABLE_QUAD,
) -> OperatorTable:
    """Tabulate Theta and its first derivatives of the spline cardinal functions."""
    m = (n - 2) // 2
    if m < 2:
        raise ValueError("the operator table needs n >= 6")
    spline = spline_basis(grid)
    dspline = spline.derivative(1)
    nr, nt = grid.nr, grid.nt
    th = np.zeros((nr, nt + 1, nr))
    dr = np.zeros_like(th)
    dt = np.zeros_like(th)
    # lag 0: Theta = 0 and D_t Theta(f) = c_n f
    dt[:, 0, :] = c_n(n) * np.eye(nr)
    for lag in range(1, nt + 1):
        a, b, c = _lag_rows(m, grid, lag * grid.dt, spline, dspline, gl_nodes, end_level, quad)
        th[:, lag, :] = a
        dr[:, lag, :] = b
        dt[:, lag, :] = c
    return OperatorTable(n, grid, th, dr, dt)


def sample_source(G: SourceField, grid: SpacetimeGrid) -> np.ndarray:
    """G on the grid as an array (nt + 1, nr), zero outside lam <= tau + k."""
    tt, rr = grid.mesh()
    vals = np.zeros_like(rr)
    for l, tau in enumerate(grid.t):
        vals[l] = G.value(rr[l], tau)
    return np.where(rr <= tt + G.k, vals, 0.0)


# ---------------------------------------------------------------------------
# bound templates


def _ts_nodes(lo, hi, level):
    """Tanh-sinh nodes on [lo, hi] (scalar bounds)."""
    if hi <= lo:
        return np.empty(0), np.empty(0)
    x, xc, w = tanh_sinh_rule(level)
    width = hi - lo
    lam = np.where(x < 0.5, lo + width * x, hi - width * xc)
    wt = width * w
    tiny = np.minimum(x, xc) * width < 64 * np.finfo(float).eps * max(abs(lo), abs(hi), 1e-300)
    return lam[~tiny], wt[~tiny]


def decay_majorant(e, power: float, tag_fn: Callable[[np.ndarray], np.ndarray], order: int = 0):
    """|G(lam, tau)| majorant built from the free-wave decay profile.

    (lam/k)^{(-m+1-order) P} ((lam+2k)/k)^{(-1+order) P} tau_+^{-P/2} times
    ``tag_fn(tau_-)``, where P is ``power``.
    """
    k, m = e.k, e.m

    def G(lam, tau):
        lam = np.asarray(lam, dtype=float)
        tp = (tau + lam + 2 * k) / k
        tm = (tau - lam + 2 * k) / k
        base = (lam / k) ** ((-m + 1 - order) * power) * ((lam + 2 * k) / k) ** ((-1 + order) * power) * tp ** (-0.5 * power)
        return base * tag_fn(tm)

    return G


def light_cone_integral(weight, r: float, t: float, k: float, level: int = 5) -> float:
    """int_0^t dtau int_{|t-r-tau|}^{min(t+r-tau, tau+k)} weight(lam, tau) / sqrt(tau + lam - t + r) dlam.

    Integrated in alpha = tau + lam, beta = tau - lam (Jacobian 1/2), so the
    inverse square root sits at an endpoint of the alpha range.
    """
    a = t - r
    total = 0.0
    lo, hi = max(a, 0.0), t + r
    # the beta range has a kink at alpha = k; split there
    pieces = [(lo, k), (k, hi)] if lo < k < hi else [(lo, hi)]
    alphas, aw = (np.concatenate(v) for v in zip(*(_ts_nodes(x, y, level) for x, y in pieces)))
    for alpha, wa in zip(alphas, aw):
        # tau <= t is implied by alpha <= t + r and beta <= t - r
        betas, bw = _ts_nodes(max(-k, -alpha), min(a, alpha), level)
        if betas.size == 0:
            continue
        lam = 0.5 * (alpha - betas)
        tau = 0.5 * (alpha + betas)
        total += wa * 0.5 * np.sum(bw * weight(lam, tau)) / math.sqrt(alpha - a)
    return total


def bound_template(G_abs, e, r: float, t: float, eta: float, level: int = 5, which: str = "rep1", dG_abs=None) -> float:
    """Right side of the L(G) bound templates with C = 1.

    ``which='rep1'`` bounds |L(G)|; ``which='rep2'`` bounds |D_r L(G)| and
    needs ``dG_abs``, a majorant of |D_lam(lam^(2m) G)|.  The light-cone
    double integrals are computed in the characteristic variables
    alpha = tau + lam, beta = tau - lam (Jacobian 1/2), beta restricted to
    the support lam <= tau + k.
    """
    m, k = e.m, e.k
    a = t - r

    def cone(weight):
        return light_cone_integral(weight, r, t, k, level)

    if which == "rep1":
        first = cone(lambda lam, tau: lam ** (m + 1 - eta) * G_abs(lam, tau))
        second = 0.0
        if a > 0:
            taus, tw = _ts_nodes(0.0, a, level)
            for tau, wt in zip(taus, tw):
                lm = a - tau
                lams, lw = _ts_nodes(0.0, min(lm, tau + k), level)
                if lams.size == 0:
                    continue
                inner = np.sum(lw * lams ** (2 * m + 1) * G_abs(lams, tau) / np.sqrt(lm - lams))
                second += wt * lm ** (-m - eta) * inner
        return (first + second) / r ** (m + 0.5 - eta)

    if which != "rep2" or dG_abs is None:
        raise ValueError("rep2 needs dG_abs")
    total = cone(lambda lam, tau: dG_abs(lam, tau) * lam ** (-m + 1 - eta))
    if a > 0:
        taus, tw = _ts_nodes(0.0, a, level)
        for tau, wt in zip(taus, tw):
            lm = a - tau
            total += wt * lm ** (m + 0.5 - eta) * float(G_abs(np.array([lm / 2]), tau)[0])
            lams, lw = _ts_nodes(0.0, min(lm / 2, tau + k), level)
            if lams.size:
                total += wt * lm ** (-m + 1 - eta) * np.sum(lw * lams ** (2 * m) * G_abs(lams, tau) / (lm - lams) ** 1.5)
            lams, lw = _ts_nodes(lm / 2, min(lm, tau + k), level)
            if lams.size:
                total += wt * lm ** (-m + 1 - eta) * np.sum(lw * dG_abs(lams, tau) / np.sqrt(lm - lams))
    taus, tw = _ts_nodes(max(a, 0.0), t, level)
    for tau, wt in zip(taus, tw):
        lam = tau - a
        total += wt * lam ** (m + 0.5 - eta) * float(G_abs(np.array([lam]), tau)[0])
    return total / r ** (m - 0.5 - eta)
