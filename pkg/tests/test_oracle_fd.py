from dataclasses import replace

import numpy as np
import pytest

from evenwave.free_wave import bump_profile, free_solution, zero_profile
from evenwave.oracle_fd import FDConfig, FDInstability, RadialSolver, SystemData, solve_snapshots, solve_until_blowup, step

K_SUPPORT = 1.5
DATA = SystemData.bump(K_SUPPORT)


def test_zero_data_stays_zero():
    z = zero_profile(K_SUPPORT)
    sol = RadialSolver(6, 1.5, 1.5, K_SUPPORT, SystemData(z, z, z, z), 1.0, FDConfig(dr=0.05, tmax=3.0))
    for _ in range(50):
        state = step(sol, sol.stable_dt())
    assert not np.any(state.u) and not np.any(state.vt)


def test_linear_energy_conserved():
    sol = RadialSolver(6, 1.5, 1.5, K_SUPPORT, DATA, 1.0, FDConfig(dr=0.025, tmax=5 * K_SUPPORT), nonlinear=False)
    e0 = sol.energy()
    while sol.state.t < 5 * K_SUPPORT:
        sol.step(min(sol.stable_dt(), 5 * K_SUPPORT - sol.state.t))
    assert abs(sol.energy() - e0) / e0 < 5e-3


def test_discrete_finite_speed():
    cfg = FDConfig(dr=0.025, tmax=4.0)
    out = solve_snapshots(6, 1.5, 1.5, K_SUPPORT, DATA, 1.0, [4.0], config=cfg, nonlinear=False)
    r = out["r"]
    u = out["u"][0]
    far = r > 4.0 + K_SUPPORT + 3 * cfg.dr
    assert np.max(np.abs(u[far])) < 1e-8 * np.max(np.abs(u))


def test_second_order_against_free_solution():
    b = bump_profile(K_SUPPORT)
    r = np.linspace(0.5 * K_SUPPORT, 3 * K_SUPPORT, 40)
    t = 2 * K_SUPPORT
    ref = free_solution(b, b, r, np.full_like(r, t), 6, derivatives=False).value
    errs = []
    for dr in (0.025, 0.0125):
        out = solve_snapshots(6, 1.5, 1.5, K_SUPPORT, DATA, 1.0, [t], r, FDConfig(dr=dr), nonlinear=False, cfl=0.25)
        errs.append(np.max(np.abs(out["u"][0] - ref)))
    assert np.log2(errs[0] / errs[1]) >= 1.9
    assert errs[1] / np.max(np.abs(ref)) < 1e-2


def test_snapshots_need_sorted_times():
    with pytest.raises(ValueError):
        solve_snapshots(6, 1.5, 1.5, K_SUPPORT, DATA, 1.0, [2.0, 1.0])


def test_linear_run_never_blows_up():
    sol = RadialSolver(6, 1.5, 1.5, K_SUPPORT, DATA, 50.0, FDConfig(dr=0.05, tmax=20.0), nonlinear=False)
    while sol.state.t < 20.0:
        sol.step(min(sol.stable_dt(), 20.0 - sol.state.t))
    assert sol.amp < 50.0 * 2


def test_blowup_detected_and_monotone_in_eps():
    cfg = FDConfig(dr=0.05, tmax=200.0)
    big = solve_until_blowup(6, 1.45, 1.45, K_SUPPORT, DATA, 8.0, cfg)
    small = solve_until_blowup(6, 1.45, 1.45, K_SUPPORT, DATA, 4.0, cfg)
    assert big.detected and small.detected
    assert small.t_blow > big.t_blow
    assert abs(big.t_blow - big.t_blow_refined) <= 0.05 * big.t_blow_refined


def test_timeout_is_reported_as_lower_bound():
    rec = solve_until_blowup(6, 1.45, 1.45, K_SUPPORT, DATA, 0.1, FDConfig(dr=0.1, tmax=5.0))
    assert not rec.detected and rec.t_blow == pytest.approx(5.0)


def test_instability_flag():
    sol = RadialSolver(6, 1.45, 1.45, K_SUPPORT, DATA, 1.0, replace(FDConfig(dr=0.05, tmax=5.0), instability_factor=1.0001))
    with pytest.raises(FDInstability):
        for _ in range(10):
            sol.step(5 * sol.stable_dt())


def test_rejects_odd_dimension():
    with pytest.raises(ValueError):
        RadialSolver(5, 1.5, 1.5, K_SUPPORT, DATA, 1.0)
