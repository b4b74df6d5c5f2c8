import math

import pytest
from hypothesis import given, strategies as st

from torusboot import formulas
from torusboot.dynamics import Modified, Standard
from torusboot.formulas import ThresholdQuery
from torusboot.lattice import ball_size, dependency_offsets


def test_ell_known_values():
    assert formulas.ell(1, 2) == 3
    assert formulas.ell(2, 3) == 7
    assert formulas.ell(5, 3) == 8  # saturates at 2^d


def test_m_known_values():
    assert formulas.m(2, 2) == 8
    assert formulas.m(2, 3) == 12
    assert formulas.m(3, 3) == 20


@given(st.integers(min_value=0, max_value=12), st.integers(min_value=2, max_value=8))
def test_ell_m_monotone(t, d):
    assert formulas.ell(t + 1, d) >= formulas.ell(t, d)
    assert formulas.ell(t, d + 1) >= formulas.ell(t, d)
    assert formulas.m(t + 1, d) > formulas.m(t, d)


@given(st.integers(min_value=1, max_value=20))
def test_m_two_dimensional_closed_form(t):
    assert formulas.m(t, 2) == 4 * t


@given(st.integers(min_value=2, max_value=8))
def test_ell_saturates_at_two_power_d(d):
    assert formulas.ell(d, d) == 2**d
    assert formulas.ell(d + 3, d) == 2**d


def test_m_general_known_values():
    assert formulas.m_general(1, 3, 2) == 6
    assert formulas.m_general(2, 3, 2) == 18


def test_m_general_rejects_bad_threshold():
    with pytest.raises(ValueError):
        formulas.m_general(2, 3, 1)
    with pytest.raises(ValueError):
        formulas.m_general(2, 3, 4)


def test_minimal_protecting_size_dispatch():
    assert formulas.minimal_protecting_size(2, 2, Standard(2)) == 8
    assert formulas.minimal_protecting_size(2, 2, Modified()) == 5


def test_lambda_leading_examples():
    assert formulas.lambda_leading(512, 2, 2, 0.0, Standard(2)) == 0.0
    assert formulas.lambda_leading(10, 2, 1, 0.1, Modified()) == pytest.approx(0.2)
    q = (2.0 / (16 * 512**2)) ** 0.125
    assert formulas.lambda_leading(512, 2, 2, q, Standard(2)) == pytest.approx(2.0)


def test_p_alpha_examples():
    query = ThresholdQuery(d=2, n=1000, t=2, alpha=0.5, rule=Standard(2))
    assert formulas.p_alpha(query) == pytest.approx(1 - (math.log(2) / 1.6e7) ** 0.125)
    q_mod = ThresholdQuery(d=2, n=1000, t=1, alpha=0.5, rule=Modified())
    assert formulas.p_alpha(q_mod) == pytest.approx(1 - (math.log(2) / 2e6) ** (1 / 3))


@given(st.floats(min_value=0.01, max_value=0.98))
def test_p_alpha_increasing_in_alpha(alpha):
    base = ThresholdQuery(d=2, n=100, t=2, alpha=alpha, rule=Standard(2))
    bigger = ThresholdQuery(d=2, n=100, t=2, alpha=alpha + 0.01, rule=Standard(2))
    assert formulas.p_alpha(bigger) > formulas.p_alpha(base)


def test_p_alpha_limit_behavior():
    near_one = ThresholdQuery(d=2, n=100, t=2, alpha=1 - 1e-12, rule=Standard(2))
    assert formulas.p_alpha(near_one) > 0.99


def test_stein_chen_zero_rho1():
    offs = dependency_offsets(2, 1)
    assert formulas.stein_chen_rhs(64, 2, 1, 0.0, {o: 0.0 for o in offs}) == 0.0


def test_stein_chen_product_identity():
    n, d, t = 64, 2, 1
    rho1 = 1e-4
    offs = dependency_offsets(d, t)
    rhs = formulas.stein_chen_rhs(n, d, t, rho1, {o: rho1 * rho1 for o in offs})
    lam = n**d * rho1
    expected = min(1.0, 1.0 / lam) * n**d * (2 * ball_size(d, 2 * t + 1) - 1) * rho1**2
    assert rhs == pytest.approx(expected)


def test_stein_chen_missing_offsets_rejected():
    with pytest.raises(ValueError, match="missing"):
        formulas.stein_chen_rhs(64, 2, 1, 1e-4, {})


def test_stein_chen_boundary_fill():
    n, d, t = 64, 2, 1
    rho1 = 1e-4
    inner = {o: rho1 * rho1 for o in dependency_offsets(d, t) if sum(abs(c) for c in o) < 3}
    full = {o: rho1 * rho1 for o in dependency_offsets(d, t)}
    assert formulas.stein_chen_rhs(
        n, d, t, rho1, inner, fill_boundary_with_product=True
    ) == pytest.approx(formulas.stein_chen_rhs(n, d, t, rho1, full))


def test_poisson_pmf_basics():
    assert formulas.poisson_pmf(0, 0.7) == pytest.approx(math.exp(-0.7))
    assert formulas.poisson_pmf(-1, 0.7) == 0.0
    assert formulas.poisson_pmf(0, 0.0) == 1.0
    assert sum(formulas.poisson_pmf(k, 3.0) for k in range(80)) == pytest.approx(1.0)


def test_tv_distance_examples():
    po = {k: formulas.poisson_pmf(k, math.log(2)) for k in range(60)}
    assert formulas.tv_distance(po, po) == 0.0
    assert formulas.tv_distance({0: 1.0}, po) == pytest.approx(0.5, abs=1e-9)


@given(
    st.dictionaries(st.integers(0, 10), st.floats(0.0, 1.0), max_size=6),
    st.dictionaries(st.integers(0, 10), st.floats(0.0, 1.0), max_size=6),
)
def test_tv_distance_symmetric_nonnegative(p, q):
    assert formulas.tv_distance(p, q) == formulas.tv_distance(q, p) >= 0.0
