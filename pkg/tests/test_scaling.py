import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from evenwave.exponents import derive, lifespan_exponent
from evenwave.oracle_fd import BlowupRecord, FDConfig
from evenwave.picard import smallness_constants
from evenwave.scaling import (
    BranchError,
    ConsistencyError,
    InsufficientDetectionsError,
    SweepConfig,
    SweepResult,
    emit_report,
    fit_lifespan,
    fmt,
    read_csv,
    region_map,
    run_certificate_sweep,
    run_sweep,
)

E = derive(1.45, 1.45, 6)


@settings(max_examples=30, deadline=None)
@given(log_c=st.floats(-3, 3), eps_hi=st.floats(0.5, 5))
def test_fit_recovers_exact_power_law(log_c, eps_hi):
    eps = eps_hi * np.array([1.0, 0.7, 0.5, 0.35, 0.25])
    s = -lifespan_exponent(E)
    T = math.exp(log_c) * eps**s
    fit = fit_lifespan(eps, T, E)
    assert fit.fitted_slope == pytest.approx(s, rel=1e-10)
    assert fit.r2 == pytest.approx(1.0) and fit.passed


def test_fit_critical_uses_double_log():
    crit = derive(1.6, 1.6, 6, branch="CriticalEqual")
    eps = np.array([0.4, 0.3, 0.2, 0.1])
    fit = fit_lifespan(eps, np.exp(2.0 * eps ** -(1.6 * 0.6)), crit)
    assert fit.fitted_slope == pytest.approx(-0.96, rel=1e-10)


def test_fit_rejects_subcritical():
    with pytest.raises(BranchError):
        fit_lifespan([1, 0.5], [1, 2], derive(2.5, 2.5, 6))


def test_sweep_config_validation():
    with pytest.raises(ValueError):
        SweepConfig(1.45, 1.45, eps_grid=(1.0, 0.5, 0.25))
    with pytest.raises(ValueError):
        SweepConfig(1.45, 1.45, eps_grid=(1.0, 2.0, 0.5, 0.25))
    with pytest.raises(ValueError):
        SweepConfig(1.45, 1.45, eps_grid=(1.0, 0.5, 0.0, -1.0))


def test_run_sweep_branch_errors():
    with pytest.raises(BranchError):
        run_sweep(SweepConfig(2.5, 2.5))
    with pytest.raises(BranchError):
        run_sweep(SweepConfig(1.6, 1.6, branch="CriticalEqual"))


def test_too_few_detections():
    cfg = SweepConfig(1.45, 1.45, eps_grid=(0.4, 0.3, 0.2, 0.1), solver=FDConfig(dr=0.1, tmax=5.0))
    with pytest.raises(InsufficientDetectionsError):
        run_sweep(cfg)


def test_certificate_consistency():
    cfg = SweepConfig(1.45, 1.45, eps_grid=(2.0, 1.0, 0.5, 1e-12))
    consts = smallness_constants(cfg.exponents, 0.2, 10.0)
    measured = [BlowupRecord(1e-12, 1.0, True, 1.0)]
    with pytest.raises(ConsistencyError):
        run_certificate_sweep(cfg, consts, measured)
    rows = run_certificate_sweep(cfg, consts, measured, strict=False)
    assert [row.consistent for row in rows] == [True, True, True, False]
    assert rows[0].certificate == 0.0


def test_emit_report_files(tmp_path):
    cfg = SweepConfig(1.45, 1.45)
    recs = [BlowupRecord(e, 10 * e**-0.8, True, 10 * e**-0.8) for e in cfg.eps_grid]
    fit = fit_lifespan(cfg.eps_grid, [r.t_blow for r in recs], cfg.exponents)
    files = emit_report(tmp_path, SweepResult(cfg, recs, fit))
    assert sorted(f.name for f in files) == ["fit.csv", "plot.csv", "sweep.csv"]
    rows = read_csv(tmp_path / "sweep.csv")
    assert float(rows[0]["t_blow"]) == recs[0].t_blow and rows[0]["detected"] == "true"
    before = (tmp_path / "sweep.csv").read_bytes()
    rows = run_certificate_sweep(cfg, smallness_constants(cfg.exponents, 0.2, 10.0), recs)
    emit_report(tmp_path, None, rows)
    assert (tmp_path / "sweep.csv").read_bytes() == before
    assert len(read_csv(tmp_path / "certificate.csv")) == 5


def test_fmt_round_trips():
    x = 0.1 + 0.2
    assert float(fmt(x)) == x and fmt(np.float64(x)) == fmt(x)
    assert fmt(True) == "true" and fmt(3) == "3"


def test_region_map_branches():
    rows = region_map(6, (1.2, 2.0), (1.2, 2.0), 3)
    assert len(rows) == 9
    assert rows[0][3] == "Supercritical" and rows[-1][3] == "Subcritical"
