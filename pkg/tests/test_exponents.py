import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from evenwave.exponents import (
    Branch,
    ExponentDomainError,
    critical_exponent_F,
    derive,
    gamma_strauss,
    lifespan_exponent,
    lifespan_lower_bound,
    log_lifespan_lower_bound,
    nu_exponent,
    strauss_root,
    theorem_strip,
)


def exact_F(p: Fraction, q: Fraction, n: int) -> Fraction:
    # rational arithmetic, independent of the float implementation
    d = p * q - 1
    return max((p + 2 + 1 / q) / d, (q + 2 + 1 / p) / d) - Fraction(n - 1, 2)


def test_F_matches_rational_oracle_at_sweep_exponent():
    p = Fraction(29, 20)
    assert critical_exponent_F(1.45, 1.45, 6) == pytest.approx(float(exact_F(p, p, 6)), abs=1e-14)
    assert float(exact_F(p, p, 6)) == pytest.approx(1.2548, abs=5e-5)


def test_F_asymmetric_pair_rational_oracle():
    p, q = Fraction(3, 2), Fraction(8, 5)
    assert critical_exponent_F(1.5, 1.6, 8) == pytest.approx(float(exact_F(p, q, 8)), abs=1e-14)


def test_strauss_root_closed_form():
    assert strauss_root(6) == pytest.approx((7 + math.sqrt(89)) / 10, abs=1e-12)
    for n in (6, 8, 10, 40):
        assert gamma_strauss(strauss_root(n), n) == pytest.approx(0.0, abs=1e-10)


@settings(max_examples=60, deadline=None)
@given(p=st.floats(1.01, 3.0), n=st.sampled_from([6, 8, 10, 12]))
def test_diagonal_F_is_gamma_over_2p_pm1(p, n):
    lhs = critical_exponent_F(p, p, n) * 2 * p * (p - 1)
    assert lhs == pytest.approx(gamma_strauss(p, n), rel=1e-10, abs=1e-10)


@settings(max_examples=60, deadline=None)
@given(p=st.floats(1.01, 3.0), q=st.floats(1.01, 3.0))
def test_F_is_symmetric(p, q):
    assert critical_exponent_F(p, q, 6) == pytest.approx(critical_exponent_F(q, p, 6), abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(p=st.floats(1.01, 2.5), q=st.floats(1.01, 2.5))
def test_F_decreases_with_dimension(p, q):
    assert critical_exponent_F(p, q, 8) == pytest.approx(critical_exponent_F(p, q, 6) - 1.0, abs=1e-12)


def test_branch_selection():
    assert derive(1.45, 1.45, 6).branch is Branch.SUPERCRITICAL
    assert derive(2.5, 2.5, 6).branch is Branch.SUBCRITICAL
    root = strauss_root(6)
    assert derive(root, root, 6).branch is Branch.CRITICAL_EQUAL


def test_branch_override_zeroes_F():
    e = derive(1.5, 1.6, 6, branch="CriticalUnequal")
    assert e.F == 0.0 and e.branch is Branch.CRITICAL_UNEQUAL
    assert e.mu == pytest.approx(1 / 1.5)


@pytest.mark.parametrize("args", [(1.0, 1.5, 6), (1.5, 0.9, 6), (1.5, 1.5, 5), (1.5, 1.5, 4)])
def test_domain_errors(args):
    with pytest.raises(ExponentDomainError):
        derive(*args)


def test_k_must_exceed_one():
    with pytest.raises(ExponentDomainError):
        derive(1.5, 1.5, 6, k=1.0)


def test_nu_and_strip():
    assert nu_exponent(1.5, 1.5) == pytest.approx(1.5 * 0.5 / (1.5 * 1.25))
    assert theorem_strip(6) == (7 / 5, 9 / 5)
    assert derive(1.6, 1.6, 6).in_theorem_strip()
    assert not derive(1.9, 1.9, 6).in_theorem_strip()


def test_lifespan_laws():
    e = derive(1.45, 1.45, 6)
    assert lifespan_exponent(e) == pytest.approx(1 / e.F)
    assert lifespan_lower_bound(e, 0.5) == pytest.approx(0.5 ** (-1 / e.F))
    crit = derive(1.5, 1.5, 6, branch="CriticalEqual")
    assert lifespan_exponent(crit) == pytest.approx(0.75)
    assert log_lifespan_lower_bound(crit, 0.1) == pytest.approx(0.1**-0.75)
    assert lifespan_lower_bound(crit, 1e-6) == math.inf
    assert lifespan_lower_bound(derive(2.5, 2.5, 6), 0.1) == math.inf
