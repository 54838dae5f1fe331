"""Lifespan sweeps, exponent fits, certificates and CSV reports."""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from evenwave.exponents import Branch, ExponentSet, critical_exponent_F, derive, lifespan_exponent, lifespan_lower_bound
from evenwave.free_wave import data_family
from evenwave.oracle_fd import BlowupRecord, FDConfig, SystemData, solve_until_blowup
from evenwave.picard import SmallnessConstants, lifespan_certificate

MIN_POINTS = 4
MIN_R2 = 0.98
SLOPE_TOL = 0.20


class BranchError(ValueError):
    """The requested fit does not exist on this branch."""


class InsufficientDetectionsError(RuntimeError):
    """Fewer than four confirmed blow-ups."""


class ConsistencyError(RuntimeError):
    """A certified lower bound exceeded a measured blow-up time."""


@dataclass(frozen=True)
class SweepConfig:
    """Everything a sweep needs; fully deterministic (no seeds involved)."""

    p: float
    q: float
    n: int = 6
    k: float = 1.5
    eps_grid: tuple[float, ...] = (2.0, 1.4, 1.0, 0.7, 0.5)
    data: str = "bump4"
    solver: FDConfig = field(default_factory=lambda: FDConfig(dr=0.05, tmax=2000.0))
    out_dir: str = "out"
    workers: int = 1
    branch: str | None = None
    A: float | None = None
    C: float | None = None
    B: float = 1.0

    def __post_init__(self):
        eps = tuple(float(x) for x in self.eps_grid)
        object.__setattr__(self, "eps_grid", eps)
        if len(eps) < MIN_POINTS:
            raise ValueError(f"eps grid needs at least {MIN_POINTS} points")
        if any(b >= a for a, b in zip(eps, eps[1:])):
            raise ValueError("eps grid must be strictly decreasing")
        if any(x <= 0 for x in eps):
            raise ValueError("eps values must be positive")

    @property
    def exponents(self) -> ExponentSet:
        return derive(self.p, self.q, self.n, self.k, self.branch)

    def system_data(self) -> SystemData:
        prof = data_family(self.data, self.k)
        return SystemData(prof, prof, prof, prof)


@dataclass(frozen=True)
class LifespanFit:
    """Least-squares fit of log T (or log log T) against log eps."""

    eps: tuple[float, ...]
    t_blow: tuple[float, ...]
    fitted_slope: float
    theoretical_slope: float
    r2: float
    branch: Branch

    @property
    def relative_error(self) -> float:
        return abs(self.fitted_slope - self.theoretical_slope) / abs(self.theoretical_slope)

    @property
    def passed(self) -> bool:
        return self.r2 >= MIN_R2 and self.relative_error <= SLOPE_TOL


def fit_lifespan(eps, t_blow, e: ExponentSet) -> LifespanFit:
    """Fit log T = a + s log eps (supercritical) or log log T = a + s log eps (critical)."""
    if e.branch is Branch.SUBCRITICAL:
        raise BranchError("subcritical exponents: no finite-lifespan law to fit")
    x = np.log(np.asarray(eps, dtype=float))
    y = np.log(np.asarray(t_blow, dtype=float))
    if e.branch.is_critical:
        y = np.log(y)
    if x.size < 2:
        raise InsufficientDetectionsError("need at least two points to fit")
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return LifespanFit(tuple(map(float, eps)), tuple(map(float, t_blow)), float(slope), -lifespan_exponent(e), r2, e.branch)


def _blowup_task(args):
    n, p, q, k, data, eps, solver = args
    return solve_until_blowup(n, p, q, k, data, eps, solver)


@dataclass
class SweepResult:
    config: SweepConfig
    records: list[BlowupRecord]
    fit: LifespanFit | None


def measure_blowups(cfg: SweepConfig) -> list[BlowupRecord]:
    """solve_until_blowup for every eps, sorted by decreasing eps."""
    data = cfg.system_data()
    tasks = [(cfg.n, cfg.p, cfg.q, cfg.k, data, eps, cfg.solver) for eps in cfg.eps_grid]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            records = list(pool.map(_blowup_task, tasks))
    else:
        records = [_blowup_task(t) for t in tasks]
    return sorted(records, key=lambda rec: -rec.eps)


def run_sweep(cfg: SweepConfig) -> SweepResult:
    """Measure blow-up times over the eps grid and fit the power law.

    Raises
    ------
    BranchError
        Subcritical input, or a critical branch (those lifespans are
        exp(c eps^-a) and are only handled by ``run_certificate_sweep``).
    InsufficientDetectionsError
        Fewer than four confirmed blow-ups.
    """
    e = cfg.exponents
    if e.branch is Branch.SUBCRITICAL:
        raise BranchError("subcritical exponents: solutions are global, no lifespan to fit")
    if e.branch.is_critical:
        raise BranchError(
            "critical branch: lifespans exp(c eps^-a) are out of reach of direct simulation; use certify"
        )
    records = measure_blowups(cfg)
    hits = [rec for rec in records if rec.detected]
    if len(hits) < MIN_POINTS:
        raise InsufficientDetectionsError(f"only {len(hits)} confirmed blow-ups (need {MIN_POINTS})")
    fit = fit_lifespan([rec.eps for rec in hits], [rec.t_blow for rec in hits], e)
    return SweepResult(cfg, records, fit)


@dataclass(frozen=True)
class CertificateRow:
    eps: float
    certificate: float
    closed_form: float
    t_blow: float

    @property
    def consistent(self) -> bool:
        return math.isnan(self.t_blow) or self.certificate <= self.t_blow


def run_certificate_sweep(
    cfg: SweepConfig,
    constants: SmallnessConstants,
    measured: list[BlowupRecord] | None = None,
    strict: bool = True,
) -> list[CertificateRow]:
    """Certified lifespans (and closed-form laws) for every eps on the grid.

    With ``measured`` records the certificate is compared to each confirmed
    blow-up time; a violation raises ``ConsistencyError`` when ``strict``.
    """
    e = cfg.exponents
    if e.F < 0:
        raise BranchError("certificates need F >= 0")
    times = {rec.eps: rec.t_blow for rec in (measured or []) if rec.detected}
    rows = []
    for eps in cfg.eps_grid:
        cert = lifespan_certificate(e, eps, constants.A, constants.C, constants.E, constants.eps1)
        rows.append(CertificateRow(eps, cert, lifespan_lower_bound(e, eps), times.get(eps, math.nan)))
    bad = [row for row in rows if not row.consistent]
    if bad and strict:
        raise ConsistencyError(f"certificate exceeds measured blow-up time at eps={[row.eps for row in bad]}")
    return rows


def region_map(n: int, p_range=(1.05, 3.0), q_range=(1.05, 3.0), resolution: int = 50, k: float = 1.5):
    """(p, q, F, branch) on a resolution x resolution rectangle."""
    rows = []
    for p in np.linspace(*p_range, resolution):
        for q in np.linspace(*q_range, resolution):
            F = critical_exponent_F(float(p), float(q), n)
            rows.append((float(p), float(q), F, derive(float(p), float(q), n, k).branch.value))
    return rows


# ---------------------------------------------------------------------------
# reports


def fmt(x) -> str:
    """Shortest round-tripping text for floats; plain str otherwise."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def write_csv(path: Path | str, header, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(x) for x in row])
    return path


def read_csv(path: Path | str) -> list[dict[str, str]]:
    with Path(path).open(encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))


SWEEP_HEADER = ("eps", "t_blow", "detected", "t_blow_refined")
FIT_HEADER = ("branch", "fitted_slope", "theoretical_slope", "r2", "relative_error", "passed")
PLOT_HEADER = ("series", "x", "y")
CERT_HEADER = ("eps", "certificate", "closed_form", "t_blow", "consistent")


def emit_report(out_dir: Path | str, result: SweepResult | None = None, certificates: list[CertificateRow] | None = None) -> list[Path]:
    """Write sweep.csv, fit.csv and plot.csv (long format) and/or certificate.csv.

    The sweep files are written when ``result`` is given, or when neither
    argument is (header-only files); certificates alone leave an existing
    sweep report untouched.
    """
    out = Path(out_dir)
    written = []
    if result is not None or certificates is None:
        records = result.records if result else []
        written.append(write_csv(out / "sweep.csv", SWEEP_HEADER, [(r.eps, r.t_blow, r.detected, r.t_blow_refined) for r in records]))
        fit = result.fit if result else None
        fit_rows = [] if fit is None else [(fit.branch.value, fit.fitted_slope, fit.theoretical_slope, fit.r2, fit.relative_error, fit.passed)]
        written.append(write_csv(out / "fit.csv", FIT_HEADER, fit_rows))
        plot = [("t_blow", r.eps, r.t_blow) for r in records if r.detected]
        if fit is not None:
            x = np.log(np.asarray(fit.eps))
            intercept = float(np.mean(np.log(fit.t_blow)) - fit.fitted_slope * np.mean(x))
            plot += [("fit", eps, math.exp(intercept + fit.fitted_slope * math.log(eps))) for eps in fit.eps]
        for row in certificates or []:
            plot.append(("certificate", row.eps, row.certificate))
        written.append(write_csv(out / "plot.csv", PLOT_HEADER, plot))
    if certificates is not None:
        written.append(
            write_csv(out / "certificate.csv", CERT_HEADER, [(c.eps, c.certificate, c.closed_form, c.t_blow, c.consistent) for c in certificates])
        )
    return written


def calibrate_constants(cfg: SweepConfig, nodes: int = 10, grid=None) -> SmallnessConstants:
    """A, C (and the derived E, eps1) for the smallness conditions.

    A comes from the second Picard iterate on an operator table (T = 5k,
    spacing 0.1k by default); C is the largest empirical constant of the two
    proposition checks on a ``nodes`` x ``nodes`` grid.  Values given in the
    config take precedence.
    """
    from evenwave.apriori import Proposition, check_prop_bounds, empirical_C
    from evenwave.duhamel import SpacetimeGrid, build_operator_table
    from evenwave.picard import calibrate_A, smallness_constants

    e = cfg.exponents
    A = cfg.A
    if A is None:
        grid = grid or SpacetimeGrid.covering(5 * e.k, e.k, 0.1 * e.k)
        A = calibrate_A(build_operator_table(e.n, grid), cfg.system_data(), e)
    C = cfg.C
    if C is None:
        entries = check_prop_bounds(Proposition.PROP12, e, nodes) + check_prop_bounds(Proposition.PROP34, e, nodes)
        C = max(1.0, empirical_C(entries))
    return smallness_constants(e, A, C, cfg.B)
