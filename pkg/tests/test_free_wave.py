import math

import numpy as np
import pytest

from evenwave.free_wave import (
    REGIONS,
    bump_profile,
    c_n,
    data_family,
    decay_weight,
    free_solution,
    region_grid,
    spline_profile,
    theta,
    theta_alt,
    verify_decay,
    zero_profile,
)

K_SUPPORT = 1.5
BUMP = bump_profile(K_SUPPORT)
ZERO = zero_profile(K_SUPPORT)


def test_c_n_closed_forms():
    # sqrt(pi) Gamma(5/2) = 3 pi / 4, sqrt(pi) Gamma(7/2) = 15 pi / 8
    assert c_n(6) == pytest.approx(3 * math.pi / 4, rel=1e-14)
    assert c_n(8) == pytest.approx(15 * math.pi / 8, rel=1e-14)


def test_bump_derivatives_match_finite_differences():
    x = np.array([0.2, 0.7, 1.3])
    h = 1e-6
    assert np.allclose(BUMP.d1(x), (BUMP.value(x + h) - BUMP.value(x - h)) / (2 * h), rtol=1e-7)
    assert np.allclose(BUMP.d2(x), (BUMP.d1(x + h) - BUMP.d1(x - h)) / (2 * h), rtol=1e-7)
    assert BUMP.value(np.array([1.6]))[0] == 0.0


def test_data_family_names():
    assert data_family("bump6", 2.0).smoothness == 5
    with pytest.raises(ValueError):
        data_family("gauss", 2.0)


def test_spline_profile_reproduces_cubic():
    nodes = np.linspace(0, 1, 11)
    prof = spline_profile(nodes, 1 - nodes**2, 1.0)
    assert prof.value(np.array([0.55]))[0] == pytest.approx(1 - 0.55**2, abs=1e-3)
    assert prof.value(np.array([1.2]))[0] == 0.0


def test_zero_data_gives_zero():
    sol = free_solution(ZERO, ZERO, [0.5, 1.0], [1.0, 2.0], 6)
    assert np.all(sol.value == 0) and np.all(sol.dr == 0) and np.all(sol.dt == 0)


def test_exact_zero_outside_cone():
    r = np.array([3.0, 5.0, 8.0])
    t = np.array([1.4, 2.0, 6.0])
    sol = free_solution(BUMP, BUMP, r, t, 6, adaptive=False)
    assert np.all(sol.value == 0.0)


def test_theta_representations_agree():
    r = np.array([0.5, 1.2, 2.0, 3.5])
    t = np.array([2.0, 1.0, 3.0, 2.5])
    a = theta(BUMP, r, t, 6)
    b = theta_alt(BUMP, r, t, 6)
    assert np.allclose(a, b, rtol=1e-8, atol=1e-12)


def test_initial_traces():
    # data (f, 0): u(r, 0+) = f(r); data (0, g): u_t(r, 0+) = g(r)
    r = np.array([0.3, 0.8, 1.2])
    t = np.full(3, 1e-4)
    u_f = free_solution(BUMP, ZERO, r, t, 6)
    u_g = free_solution(ZERO, BUMP, r, t, 6)
    assert np.allclose(u_f.value, BUMP.value(r), atol=2e-4)
    assert np.allclose(u_g.dt, BUMP.value(r), atol=2e-4)


@pytest.mark.parametrize("n", [6, 8])
def test_radial_wave_equation_residual(n):
    r0 = np.array([0.7, 1.5, 2.5])
    t0 = 1.8
    d = 1e-2
    u = lambda r, t: free_solution(BUMP, BUMP, r, np.full_like(r, t), n, derivatives=False).value  # noqa: E731
    c = u(r0, t0)
    utt = (u(r0, t0 + d) - 2 * c + u(r0, t0 - d)) / d**2
    urr = (u(r0 + d, t0) - 2 * c + u(r0 - d, t0)) / d**2
    ur = (u(r0 + d, t0) - u(r0 - d, t0)) / (2 * d)
    res = utt - urr - (n - 1) / r0 * ur
    scale = np.max(np.abs(utt)) + np.max(np.abs(urr))
    assert np.max(np.abs(res)) / scale < 1e-3


def test_gradient_matches_finite_differences():
    r = np.array([0.6, 1.7, 2.4])
    t = np.array([1.0, 2.2, 1.5])
    h = 1e-5
    sol = free_solution(BUMP, BUMP, r, t, 6)
    val = lambda rr, tt: free_solution(BUMP, BUMP, rr, tt, 6, derivatives=False).value  # noqa: E731
    assert np.allclose(sol.dr, (val(r + h, t) - val(r - h, t)) / (2 * h), rtol=1e-5, atol=1e-9)
    assert np.allclose(sol.dt, (val(r, t + h) - val(r, t - h)) / (2 * h), rtol=1e-5, atol=1e-9)


def test_linearity_in_data():
    r = np.array([0.9, 2.1])
    t = np.array([1.2, 2.5])
    one = free_solution(BUMP, ZERO, r, t, 6).value + free_solution(ZERO, BUMP, r, t, 6).value
    both = free_solution(BUMP, BUMP, r, t, 6).value
    assert np.allclose(one, both, rtol=1e-12, atol=1e-15)


def test_region_grids_lie_in_their_regions():
    k, T = K_SUPPORT, 10.0
    r, t = region_grid("t>=2r", k, T, 4)
    assert np.all((t >= 2 * r - 1e-12) | (r < np.minimum(t, k) + 1e-12))
    r, t = region_grid("k<=r<=t<=2r", k, T, 4)
    assert np.all((r >= k) & (r <= t) & (t <= 2 * r + 1e-12))
    r, t = region_grid("r>t", k, T, 4)
    assert np.all(r > t)
    with pytest.raises(ValueError):
        region_grid("nowhere", k, T, 4)


def test_decay_weight_positive():
    assert np.all(decay_weight(np.array([0.5, 2.0]), np.array([1.0, 1.0]), 1.5, 2, 1) > 0)


def test_verify_decay_reports_every_region():
    reps = verify_decay(BUMP, BUMP, 6, K_SUPPORT, nodes=3, candidates=1, zooms=1)
    assert [rep.name for rep in reps] == [f"{reg}:|beta|={o}" for reg in REGIONS for o in (0, 1)]
    assert all(rep.finite for rep in reps)
