"""Picard iteration for the integral system in the weighted space X.

The unknowns split as u = eps u0 + U, v = eps v0 + V with (u0, v0) the free
solutions and

    U_{j+1} = L(|eps v0 + V_j|^p),    V_{j+1} = L(|eps u0 + U_j|^q),

starting from U_1 = V_1 = 0.  Everything lives on the uniform grid of an
``OperatorTable``; sups in the weighted norms are grid sups.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from evenwave.duhamel import OperatorTable, SpacetimeGrid, build_operator_table
from evenwave.exponents import Branch, ExponentSet
from evenwave.free_wave import free_solution
from evenwave.oracle_fd import SystemData

F_GATE_TOL = 1e-12
DIVERGENCE_FACTOR = 1e3
FREE_LEVEL = 3


class TheoremGateError(ValueError):
    """(p, q, n) outside the exponent strip, or F < 0."""


class DivergenceError(RuntimeError):
    """An iterate left 10^3 times the ball radius."""


def check_gate(e: ExponentSet) -> None:
    if not e.in_theorem_strip():
        lo, hi = (e.n + 1) / (e.n - 1), (e.n + 3) / (e.n - 1)
        raise TheoremGateError(f"need {lo:.4g} < p <= q < {hi:.4g}, got p={e.p}, q={e.q}")
    if e.F < -F_GATE_TOL:
        raise TheoremGateError(f"F = {e.F:.3e} < 0 (subcritical)")


# ---------------------------------------------------------------------------
# weights and norms


def _tau(r, t, k):
    r = np.asarray(r, dtype=float)
    t = np.asarray(t, dtype=float)
    return (t + r + 2 * k) / k, (t - r + 2 * k) / k


def W_weight(e: ExponentSet, tau_minus):
    m = e.m
    return np.asarray(tau_minus, dtype=float) ** ((m + 0.5) * e.p - (m + 1.5))


def Z_weight(e: ExponentSet, tau_minus):
    tm = np.asarray(tau_minus, dtype=float)
    if e.branch is Branch.CRITICAL_UNEQUAL:
        return tm ** (1.0 / e.p) * np.log(3.0 * tm) ** e.nu
    return tm**e.mu


def weights(e: ExponentSet, r, t):
    """(w0, w1, z0, z1, W, Z) at (r, t); support condition r <= t + k assumed."""
    k, m = e.k, e.m
    tp, tm = _tau(r, t, k)
    r = np.asarray(r, dtype=float)
    W = W_weight(e, tm)
    Z = Z_weight(e, tm)
    common0 = (r / k) ** (m - 1) * ((r + 2 * k) / k) * np.sqrt(tp)
    common1 = (r / k) ** m * np.sqrt(tp)
    return common0 * W, common1 * W, common0 * Z, common1 * Z, W, Z


@dataclass(frozen=True)
class SpacetimeField:
    """Field values and r-derivatives on a ``SpacetimeGrid``, shape (nt + 1, nr)."""

    grid: SpacetimeGrid
    values: np.ndarray
    dr_values: np.ndarray
    k: float
    j: int = 0
    name: str = "U"

    @property
    def support_mask(self) -> np.ndarray:
        tt, rr = self.grid.mesh()
        return rr <= tt + self.k

    def masked(self) -> "SpacetimeField":
        mask = self.support_mask
        return SpacetimeField(self.grid, np.where(mask, self.values, 0.0), np.where(mask, self.dr_values, 0.0), self.k, self.j, self.name)

    def __sub__(self, other: "SpacetimeField") -> "SpacetimeField":
        return SpacetimeField(self.grid, self.values - other.values, self.dr_values - other.dr_values, self.k, self.j, self.name)

    def scaled(self, factor: float) -> "SpacetimeField":
        return SpacetimeField(self.grid, factor * self.values, factor * self.dr_values, self.k, self.j, self.name)

    def max_jump(self) -> float:
        """Largest neighbour jump in r divided by h times the local |D_r| bound."""
        jump = np.abs(np.diff(self.values, axis=1))
        lip = np.maximum(np.abs(self.dr_values[:, 1:]), np.abs(self.dr_values[:, :-1]))
        scale = self.grid.h * np.max(lip) if np.max(lip) > 0 else 1.0
        return float(np.max(jump) / scale) if jump.size else 0.0

    @classmethod
    def zeros(cls, grid: SpacetimeGrid, k: float, j: int = 0, name: str = "U") -> "SpacetimeField":
        z = np.zeros((grid.nt + 1, grid.nr))
        return cls(grid, z, z.copy(), k, j, name)


@dataclass(frozen=True)
class WeightedNorms:
    norm1: float
    norm2: float
    aux1: float
    aux2: float


def weighted_norms(fld: SpacetimeField, e: ExponentSet) -> WeightedNorms:
    """Grid sups of the weighted norms (both weight families) and the auxiliary norms."""
    tt, rr = fld.grid.mesh()
    mask = rr <= tt + e.k
    # weights are only defined on the support cone
    w0, w1, z0, z1, _, _ = weights(e, np.where(mask, rr, tt + e.k), tt)
    val = np.where(mask, np.abs(fld.values), 0.0)
    der = np.where(mask, np.abs(fld.dr_values), 0.0)
    return WeightedNorms(
        norm1=float(np.max(w0 * val) + np.max(w1 * der)),
        norm2=float(np.max(z0 * val) + np.max(z1 * der)),
        aux1=float(np.max(w1 * val)),
        aux2=float(np.max(z1 * val)),
    )


# ---------------------------------------------------------------------------
# iteration


@dataclass(frozen=True)
class IterationReport:
    """State after iterate j (U_j, V_j).

    ``diff1``/``diff2`` are ||U_{j+1} - U_j||_1 and ||V_{j+1} - V_j||_2 (nan
    for the last iterate); ``ratio`` is diff(j+1)/diff(j-1), the worse of the
    two unknowns, nan where undefined.
    """

    j: int
    norm_U: WeightedNorms
    norm_V: WeightedNorms
    diff1: float
    diff2: float
    aux_diff1: float
    aux_diff2: float
    in_ball: bool
    ratio: float

    @property
    def norm1(self) -> float:
        return self.norm_U.norm1

    @property
    def norm2(self) -> float:
        return self.norm_V.norm2


@dataclass
class PicardRun:
    """Reports together with the final fields and the free parts."""

    reports: list[IterationReport]
    U: SpacetimeField
    V: SpacetimeField
    u0: np.ndarray
    v0: np.ndarray
    eps: float
    A: float
    history: list[tuple[SpacetimeField, SpacetimeField]] = field(default_factory=list, repr=False)

    @property
    def u(self) -> np.ndarray:
        return self.eps * self.u0 + self.U.values

    @property
    def v(self) -> np.ndarray:
        return self.eps * self.v0 + self.V.values


def _free_on_grid(grid: SpacetimeGrid, f, g, n: int, level: int) -> np.ndarray:
    tt, rr = grid.mesh()
    vals = free_solution(f, g, rr.ravel(), tt.ravel(), n, adaptive=False, level=level).value
    return vals.reshape(tt.shape)


def free_parts(table: OperatorTable, data: SystemData, pointwise: bool = True, level: int = FREE_LEVEL) -> tuple[np.ndarray, np.ndarray]:
    """Free solutions u0, v0 on the table grid (unit data size).

    ``pointwise`` evaluates ``free_solution`` at every grid node.  The table
    route samples the data by splines, which cannot resolve the high data
    derivatives that focus at r = 0, so it is kept as a cheap fallback.
    """
    grid = table.grid
    if pointwise:
        u0 = _free_on_grid(grid, data.f1, data.g1, table.n, level)
        same = data.f2 is data.f1 and data.g2 is data.g1
        v0 = u0.copy() if same else _free_on_grid(grid, data.f2, data.g2, table.n, level)
    else:
        r = grid.r
        u0 = table.free_part(data.f1.value(r), data.g1.value(r))
        v0 = table.free_part(data.f2.value(r), data.g2.value(r))
    tt, rr = grid.mesh()
    mask = rr <= tt + data.support
    return np.where(mask, u0, 0.0), np.where(mask, v0, 0.0)


def _duhamel_field(table: OperatorTable, source: np.ndarray, k: float, j: int, name: str) -> SpacetimeField:
    return SpacetimeField(table.grid, table.apply(source), table.apply(source, derivative=True), k, j, name).masked()


def calibrate_A(table: OperatorTable, data: SystemData, e: ExponentSet, free: tuple[np.ndarray, np.ndarray] | None = None) -> float:
    """A = 2 max(||L(|v0|^p)||_1, ||L(|u0|^q)||_2).

    U_2 = eps^p L(|v0|^p) exactly, so ||U_2||_1 / eps^p does not depend on eps
    and a single evaluation replaces the pilot sweep.
    """
    u0, v0 = free_parts(table, data) if free is None else free
    U2 = _duhamel_field(table, np.abs(v0) ** e.p, e.k, 2, "U")
    V2 = _duhamel_field(table, np.abs(u0) ** e.q, e.k, 2, "V")
    return 2.0 * max(weighted_norms(U2, e).norm1, weighted_norms(V2, e).norm2)


def iterate(
    data: SystemData,
    e: ExponentSet,
    eps: float,
    j_max: int = 8,
    table: OperatorTable | None = None,
    grid: SpacetimeGrid | None = None,
    A: float | None = None,
    keep_history: bool = False,
) -> PicardRun:
    """Run the Picard sequence up to iterate ``j_max`` (U_1 = V_1 = 0).

    Parameters
    ----------
    table, grid
        A prebuilt operator table, or a grid to build one on (default: T = 5k
        with spacing 0.1 k).
    A
        Ball constant; calibrated from the data when omitted.

    Raises
    ------
    TheoremGateError
        Exponents outside the strip or F < 0.
    DivergenceError
        A norm exceeded 10^3 times the ball radius.
    """
    check_gate(e)
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    if j_max < 2:
        raise ValueError("j_max must be at least 2")
    if table is None:
        grid = grid or SpacetimeGrid.covering(5 * e.k, e.k, 0.1 * e.k)
        table = build_operator_table(e.n, grid)
    u0, v0 = free_parts(table, data)
    if A is None:
        A = calibrate_A(table, data, e, (u0, v0))
    k = e.k
    ball_U = 2 * A * eps**e.p
    ball_V = 2 * A * eps**e.q

    U = [SpacetimeField.zeros(table.grid, k, 1, "U")]
    V = [SpacetimeField.zeros(table.grid, k, 1, "V")]
    for j in range(1, j_max):
        U.append(_duhamel_field(table, np.abs(eps * v0 + V[-1].values) ** e.p, k, j + 1, "U"))
        V.append(_duhamel_field(table, np.abs(eps * u0 + U[-2].values) ** e.q, k, j + 1, "V"))
        nu_, nv_ = weighted_norms(U[-1], e).norm1, weighted_norms(V[-1], e).norm2
        if (ball_U > 0 and nu_ > DIVERGENCE_FACTOR * ball_U) or (ball_V > 0 and nv_ > DIVERGENCE_FACTOR * ball_V):
            raise DivergenceError(f"iterate {j + 1} left the ball: {nu_:.3e} vs radius {ball_U:.3e}")

    diffs = []
    for j in range(j_max - 1):
        dU = weighted_norms(U[j + 1] - U[j], e)
        dV = weighted_norms(V[j + 1] - V[j], e)
        diffs.append((dU.norm1, dV.norm2, dU.aux1, dV.aux2))

    def two_step(j, c):
        # diff(j+1) / diff(j-1); diff(i) sits at list index i - 1
        if j < 2 or j >= len(diffs):
            return math.nan
        den = diffs[j - 2][c]
        return diffs[j][c] / den if den > 0 else (0.0 if diffs[j][c] == 0 else math.inf)

    reports = []
    for j in range(1, j_max + 1):
        nU = weighted_norms(U[j - 1], e)
        nV = weighted_norms(V[j - 1], e)
        d = diffs[j - 1] if j - 1 < len(diffs) else (math.nan,) * 4
        ratios = [two_step(j, 0), two_step(j, 1)]
        ratio = math.nan if all(math.isnan(x) for x in ratios) else float(np.nanmax(ratios))
        in_ball = nU.norm1 <= ball_U * (1 + 1e-12) and nV.norm2 <= ball_V * (1 + 1e-12)
        reports.append(IterationReport(j, nU, nV, d[0], d[1], d[2], d[3], bool(in_ball), ratio))
    hist = list(zip(U, V)) if keep_history else []
    return PicardRun(reports, U[-1], V[-1], u0, v0, eps, A, hist)


# ---------------------------------------------------------------------------
# smallness constants and lifespan certificate


@dataclass(frozen=True)
class SmallnessConstants:
    """Constants of the closing argument.

    ``E`` bounds eps^{p(q-1)} E_1(T) and eps^{q(p-1)} E_2(T); ``eps1`` is the
    largest data size for which the eps-only conditions hold.
    """

    A: float
    B: float
    C: float
    s: float
    E: float
    eps1: float


def contraction_B(run: PicardRun) -> float:
    """B = max(1, 4|||U3 - U2|||, 2|||U2 - U1|||, same for V) from the auxiliary diffs."""
    reps = run.reports
    vals = [1.0]
    if len(reps) >= 2:
        vals += [2 * reps[0].aux_diff1, 2 * reps[0].aux_diff2]
    if len(reps) >= 3:
        vals += [4 * reps[1].aux_diff1, 4 * reps[1].aux_diff2]
    return float(max(v for v in vals if np.isfinite(v)))


def smallness_constants(e: ExponentSet, A: float, C: float, B: float = 1.0) -> SmallnessConstants:
    """E and eps1 from A, C and B with s = 2^(1-p)."""
    p, q = e.p, e.q
    s = 2.0 ** (1 - p)
    eps1 = min(
        (6 * C) ** (-1 / (p - 1)),
        (2 ** (q - 1) * 3 * C * A ** (q - 2)) ** (-1 / ((p - 1) * (q - 1))),
        (8 * C**2 * B ** (p - 1) * s**-2) ** (-1 / q),
        (4 * C * B ** (q - 1) / s) ** -1,
    )
    E = min(
        1 / (2**q * 3 * A ** (q - 1) * C),
        1 / (2 ** (q + 1) * A ** (q - 1) * C**2 * s**-2),
        1 / (2 ** (p + 2) * A ** (p - 1) * C**2 * B ** (q - 1) * s**-2),
        1 / (2 ** (q + 2) * A ** (q - 1) * C**2 * B ** (p - 1) * s**-2),
        1 / (8 * A * C * B ** (q - 1) / s),
    )
    return SmallnessConstants(A, B, C, s, E, eps1)


def E1(e: ExponentSet, T):
    X = (np.asarray(T, dtype=float) + 2 * e.k) / e.k
    if e.branch is Branch.CRITICAL_UNEQUAL:
        return np.log(X) ** (1 - e.p * e.nu)
    if e.branch is Branch.CRITICAL_EQUAL:
        return np.log(X)
    return X ** (e.p * (e.q - 1) * e.F)


def E2(e: ExponentSet, T):
    X = (np.asarray(T, dtype=float) + 2 * e.k) / e.k
    if e.branch is Branch.CRITICAL_UNEQUAL:
        return np.log(X) ** e.nu
    if e.branch is Branch.CRITICAL_EQUAL:
        return np.log(X)
    return X ** (e.q * (e.p - 1) * e.F)


def _log_X(e: ExponentSet, eps: float, E: float) -> float:
    p, q = e.p, e.q
    le = math.log(eps)
    if e.branch is Branch.SUPERCRITICAL:
        lE = math.log(E)
        return min(lE / (p * (q - 1) * e.F), lE / (q * (p - 1) * e.F)) - le / e.F
    if e.branch is Branch.CRITICAL_UNEQUAL:
        lead = min(E ** ((p * q - 1) / (q - 1)), E ** (1 / e.nu))
        return lead * math.exp(-p * (p * q - 1) * le)
    if e.branch is Branch.CRITICAL_EQUAL:
        return E * math.exp(-p * (p - 1) * le)
    raise TheoremGateError("no lifespan certificate on the subcritical branch")


def log_lifespan_certificate(e: ExponentSet, eps: float, A: float, C: float, E: float, eps1: float = math.inf) -> float:
    """log of the certified T; -inf when the smallness conditions fail.

    The conditions eps^{p(q-1)} E_1(T) <= E and eps^{q(p-1)} E_2(T) <= E are
    monotone in T, so the largest admissible X = (T + 2k)/k has a closed
    form per branch.
    """
    if e.F < -F_GATE_TOL:
        raise TheoremGateError("F < 0")
    if eps <= 0:
        raise ValueError("eps must be positive")
    if eps >= eps1 or E <= 0:
        return -math.inf
    lx = _log_X(e, eps, E)
    if lx <= math.log(2.0):
        return -math.inf
    # T = k (X - 2) = k X (1 - 2/X)
    return math.log(e.k) + lx + math.log1p(-2.0 * math.exp(-lx))


def lifespan_certificate(e: ExponentSet, eps: float, A: float, C: float, E: float, eps1: float = math.inf) -> float:
    """Certified lifespan T (0 when eps is too large; inf on double overflow)."""
    lt = log_lifespan_certificate(e, eps, A, C, E, eps1)
    if lt == -math.inf:
        return 0.0
    return math.inf if lt > 709.0 else math.exp(lt)


def certificate_T_grid(e: ExponentSet, eps: float, E: float, T_grid) -> float:
    """Largest T on ``T_grid`` meeting both smallness conditions (0 if none).

    Brute-force counterpart of ``lifespan_certificate``, for cross-checks.
    """
    T = np.asarray(T_grid, dtype=float)
    ok = (eps ** (e.p * (e.q - 1)) * E1(e, T) <= E) & (eps ** (e.q * (e.p - 1)) * E2(e, T) <= E)
    return float(T[ok].max()) if np.any(ok) else 0.0
