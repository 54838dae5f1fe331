"""Acceptance criteria 1-10, each at its stated tolerance and time limit.

Every test records a one-line summary; conftest prints one PASS/FAIL line per
criterion at the end of the run.
"""

import math
import subprocess
import sys
import time

import numpy as np
import pytest

from evenwave.apriori import (
    LemmaVariant,
    Proposition,
    check_beta_lemma,
    check_exponent_identities,
    check_prop_bounds,
    strip_samples,
)
from evenwave.duhamel import SourceField, SpacetimeGrid, apply_L, build_operator_table
from evenwave.exponents import critical_exponent_F, derive, gamma_strauss, strauss_root
from evenwave.free_wave import bump_profile, free_solution, verify_decay
from evenwave.kernels import (
    K,
    KTILDE,
    check_recurrence,
    edge_ratio,
    recurrence_order,
    sample_queries,
    sample_recurrence_queries,
    seam_residual,
)
from evenwave.oracle_fd import FDConfig, SystemData, solve_snapshots
from evenwave.picard import iterate, log_lifespan_certificate
from evenwave.scaling import SweepConfig, calibrate_constants, run_certificate_sweep, run_sweep

pytestmark = pytest.mark.acceptance

K_SUPPORT = 1.5
BUMP = bump_profile(K_SUPPORT)
DATA = SystemData.bump(K_SUPPORT)


def summary(record_property, text):
    record_property("criterion_summary", text)


def test_criterion_01_exponent_algebra(record_property):
    start = time.perf_counter()
    ps = np.random.default_rng(1).uniform(1.4, 1.8, 50)
    worst = 0.0
    for p in ps:
        F = critical_exponent_F(float(p), float(p), 6)
        gamma = 2 + 7 * p - 5 * p * p
        assert gamma_strauss(float(p), 6) == pytest.approx(gamma, abs=1e-14)
        worst = max(worst, abs(F * 2 * p * (p - 1) - gamma))
    root_err = abs(strauss_root(6) - (7 + math.sqrt(89)) / 10)
    elapsed = time.perf_counter() - start
    summary(record_property, f"identity residual {worst:.1e}, root error {root_err:.1e}, {elapsed:.3f} s")
    assert worst < 1e-12
    assert root_err < 1e-12
    assert elapsed < 1.0


def test_criterion_02_kernel_identities(record_property):
    start = time.perf_counter()
    m = 2
    rng = np.random.default_rng(2)
    edge = {j: max(edge_ratio(m, j, r, t) for _, r, t in sample_queries(K, 50, rng)) for j in (0, 1)}
    seam = {j: max(seam_residual(m, j, r, t) for _, r, t in sample_queries(KTILDE, 50, rng)) for j in (0, 1)}
    res, order = 0.0, math.inf
    for variant in (K, KTILDE):
        for lam, r, t in sample_recurrence_queries(variant, 50, rng):
            res = max(res, check_recurrence(m, 1, lam, r, t, 1e-3, variant))
            order = min(order, recurrence_order(m, 1, lam, r, t, 2e-2, variant))
    elapsed = time.perf_counter() - start
    summary(
        record_property,
        f"edge j=0 {edge[0]:.1e}, j=1 {edge[1]:.1e} (< 1e-6); seam {max(seam.values()):.1e} (< 1e-8); "
        f"recurrence {res:.1e} (< 1e-4), order {order:.2f} (>= 1.9); {elapsed:.0f} s",
    )
    assert seam[0] < 1e-8 and seam[1] < 1e-8
    assert res < 1e-4 and order >= 1.9
    assert elapsed < 60
    # K_1 vanishes only linearly in the offset at lam = t + r; see the decisions ledger
    assert edge[0] < 1e-6 and edge[1] < 1e-6


def test_criterion_03_free_solution_vs_fd(record_property):
    start = time.perf_counter()
    r = np.linspace(0.5 * K_SUPPORT, 3 * K_SUPPORT, 26)
    ts = np.linspace(0.0, 2 * K_SUPPORT, 11)
    tt, rr = np.meshgrid(ts, r, indexing="ij")
    ref = free_solution(BUMP, BUMP, rr.ravel(), tt.ravel(), 6, derivatives=False).value.reshape(tt.shape)
    fd = solve_snapshots(6, 1.6, 1.6, K_SUPPORT, DATA, 1.0, ts, r, FDConfig(dr=0.0125), nonlinear=False)["u"]
    rel = np.max(np.abs(fd - ref)) / np.max(np.abs(ref))
    ro = np.concatenate([t + K_SUPPORT + np.linspace(1e-6, 3.0, 12) for t in ts])
    to = np.repeat(ts, 12)
    outside = np.max(np.abs(free_solution(BUMP, BUMP, ro, to, 6, derivatives=False).value))
    elapsed = time.perf_counter() - start
    summary(record_property, f"relative L-inf {rel:.2e} (<= 1e-2), outside support {outside:.1e}; {elapsed:.0f} s")
    assert rel <= 1e-2
    assert outside < 1e-12
    assert elapsed < 300


def test_criterion_04_decay_bound_stability(record_property):
    start = time.perf_counter()
    reports = verify_decay(BUMP, BUMP, 6, K_SUPPORT)
    elapsed = time.perf_counter() - start
    worst = max(rep.drift for rep in reports)
    summary(record_property, f"{len(reports)} sup ratios, worst drift {worst:.3f} (< 0.10); {elapsed:.0f} s")
    assert len(reports) == 6
    assert all(rep.finite for rep in reports)
    assert worst < 0.10
    assert elapsed < 300


def smooth_compact_source(k=K_SUPPORT):
    def shape(lam):
        s = np.clip(1 - (lam / k) ** 2, 0, None)
        return s**4, -8 * lam / k**2 * s**3

    def in_time(tau):
        return (1 + 0.5 * tau**2) * np.exp(-tau)

    return SourceField(
        lambda lam, tau: shape(lam)[0] * in_time(tau),
        lambda lam, tau: shape(lam)[1] * in_time(tau),
        k,
        radius=lambda tau: k,
    )


def test_criterion_05_duhamel_residual(record_property):
    start = time.perf_counter()
    G = smooth_compact_source()
    n, d = 6, 1e-2
    r = np.array([0.3, 0.6, 0.9, 1.2, 1.5, 1.8, 2.4, 3.0])
    res, scale = [], []
    for t in (0.5, 1.0, 2.0):
        c = apply_L(G, r, t, n)
        wtt = (apply_L(G, r, t + d, n) - 2 * c + apply_L(G, r, t - d, n)) / d**2
        rp, rm = apply_L(G, r + d, t, n), apply_L(G, r - d, t, n)
        lap = (rp - 2 * c + rm) / d**2 + (n - 1) / r * (rp - rm) / (2 * d)
        g = G.value(r, t)
        res.append(wtt - lap - g)
        scale.append(g)
    rel = np.max(np.abs(res)) / np.max(np.abs(scale))
    elapsed = time.perf_counter() - start
    summary(record_property, f"scaled residual {rel:.2e} (< 2e-2); {elapsed:.0f} s")
    assert rel < 0.02
    assert elapsed < 300


def test_criterion_06_picard(record_property):
    start = time.perf_counter()
    e = derive(1.6, 1.6, 6, K_SUPPORT)
    eps = 1e-2
    table = build_operator_table(6, SpacetimeGrid.covering(5 * K_SUPPORT, K_SUPPORT, 0.15))
    run = iterate(DATA, e, eps, 6, table=table)
    grid = table.grid
    fd = solve_snapshots(6, 1.6, 1.6, K_SUPPORT, DATA, eps, grid.t, grid.r, FDConfig(dr=0.0125))
    rel = np.max(np.abs(run.u - fd["u"])) / np.max(np.abs(fd["u"]))
    ratios = [rep.ratio for rep in run.reports if rep.j >= 3 and not math.isnan(rep.ratio)]
    elapsed = time.perf_counter() - start
    summary(
        record_property,
        f"in ball {all(rep.in_ball for rep in run.reports)}, ratios from j=3 "
        f"{', '.join(f'{x:.1e}' for x in ratios)} (<= 0.25), u vs FD {rel:.2e} (<= 2e-2); {elapsed:.0f} s",
    )
    assert len(run.reports) == 6 and all(rep.in_ball for rep in run.reports)
    assert ratios and all(x <= 0.25 for x in ratios)
    assert rel <= 0.02
    assert elapsed < 1800


def test_criterion_07_apriori_suite(record_property):
    start = time.perf_counter()
    e = derive(1.6, 1.6, 6, K_SUPPORT)
    T = 20 * K_SUPPORT
    prop12 = check_prop_bounds(Proposition.PROP12, e, nodes=20, T=T)
    prop34 = check_prop_bounds(Proposition.PROP34, e, nodes=20, T=T)
    tags12 = {x.tag for x in prop12}
    tags34 = {x.tag for x in prop34}
    entries = prop12 + prop34
    worst = max(x.drift for x in entries)
    lemma = {}
    for label, variant, l in (("l>1", "PowerLaw", 2.0), ("l=1", "PowerLaw", 1.0), ("l<1", "PowerLaw", 0.5), ("log", "LogLaw", 0.5)):
        ratios = [check_beta_lemma(LemmaVariant(variant), K_SUPPORT, a, l, 0.5) for a in (0.0, K_SUPPORT, 10 * K_SUPPORT, 100 * K_SUPPORT)]
        lemma[label] = max(ratios)
    samples = strip_samples(6, 50, seed=7) + [derive(1.6, 1.6, 6), derive(1.45, 1.6, 6)]
    identities = [check_exponent_identities(s) for s in samples]
    elapsed = time.perf_counter() - start
    summary(
        record_property,
        f"{len(tags12)} + {len(tags34)} majorants, {len(entries)} ratios, worst drift {worst:.3f} (< 0.10); "
        f"lemma max ratios {', '.join(f'{k} {v:.2f}' for k, v in lemma.items())}; "
        f"identities ok {sum(r.ok() for r in identities)}/{len(identities)}; {elapsed:.0f} s",
    )
    assert len(tags12) == 12 and len(tags34) == 6
    assert all(x.finite for x in entries) and worst < 0.10
    assert all(np.isfinite(v) and v < 10 for v in lemma.values())
    assert all(r.ok(1e-12) for r in identities)
    assert elapsed < 600


def test_criterion_08_lifespan_scaling(record_property):
    start = time.perf_counter()
    cfg = SweepConfig(1.45, 1.45, 6, K_SUPPORT)
    e = cfg.exponents
    result = run_sweep(cfg)
    fit = result.fit
    constants = calibrate_constants(cfg)
    rows = run_certificate_sweep(cfg, constants, result.records, strict=False)
    elapsed = time.perf_counter() - start
    summary(
        record_property,
        f"F {e.F:.4f}, slope {fit.fitted_slope:.4f} vs {-1 / e.F:.4f} (rel. error {fit.relative_error:.3f} <= 0.20), "
        f"r2 {fit.r2:.4f} (>= 0.98), certificates <= tBlow {sum(r.consistent for r in rows)}/{len(rows)}; {elapsed:.0f} s",
    )
    assert e.F == pytest.approx(1.2548, abs=1e-4) and 1 / e.F == pytest.approx(0.797, abs=1e-3)
    assert all(rec.detected for rec in result.records)
    assert fit.relative_error <= 0.20 and fit.r2 >= 0.98
    assert all(row.consistent for row in rows)
    assert elapsed < 1200


def test_criterion_09_critical_certificate_shape(record_property):
    start = time.perf_counter()
    eps = np.geomspace(1e-3, 1e-5, 5)
    errors = {}
    for p, q, branch, law in ((1.5, 1.7, "CriticalUnequal", 1.5 * (1.5 * 1.7 - 1)), (1.6, 1.6, "CriticalEqual", 1.6 * 0.6)):
        e = derive(p, q, 6, K_SUPPORT, branch)
        assert e.F == 0.0
        log_T = np.array([log_lifespan_certificate(e, x, 1.0, 1.0, 0.5) for x in eps])
        slope = np.polyfit(np.log(eps), np.log(log_T), 1)[0]
        errors[branch] = abs(slope + law) / law
    elapsed = time.perf_counter() - start
    summary(record_property, ", ".join(f"{b} slope error {v:.1e}" for b, v in errors.items()) + f" (< 0.02); {elapsed:.3f} s")
    assert all(v < 0.02 for v in errors.values())
    assert elapsed < 1.0


CHEAP_SWEEP = """
[problem]
p = 1.45
q = 1.45
n = 6
k = 1.5
data = bump4

[sweep]
eps = 16, 12, 8, 6

[solver]
dr = 0.1
tmax = 300
"""


def test_criterion_10_deterministic_sweep(tmp_path, record_property):
    config = tmp_path / "sweep.ini"
    config.write_text(CHEAP_SWEEP)
    outs = []
    for name in ("first", "second"):
        out = tmp_path / name
        proc = subprocess.run(
            [sys.executable, "-m", "evenwave.cli", "--config", str(config), "--out", str(out), "sweep"],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 0, proc.stderr
        outs.append(out)
    names = sorted(p.name for p in outs[0].glob("*.csv"))
    same = [(outs[0] / n).read_bytes() == (outs[1] / n).read_bytes() for n in names]
    summary(record_property, f"{sum(same)}/{len(names)} CSVs byte-identical ({', '.join(names)})")
    assert names == ["fit.csv", "plot.csv", "sweep.csv"]
    assert all(same)
