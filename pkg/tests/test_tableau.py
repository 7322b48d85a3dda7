import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mrkc.cheb import cheb_eval
from mrkc.errors import InvalidInputError
from mrkc.stability import rkc_stability_poly
from mrkc.tableau import MAX_DAMPING, build_tableau, damping_beta, stability_interval


def test_one_stage_is_euler():
    tab = build_tableau(1, 0.0)
    assert (tab.omega0, tab.omega1, tab.mu[1], tab.ell) == (1.0, 1.0, 1.0, 2.0)


def test_two_stage_undamped():
    tab = build_tableau(2, 0.0)
    assert tab.omega1 == pytest.approx(0.25, rel=1e-15)
    assert tab.ell == pytest.approx(8.0, rel=1e-15)


def test_ten_stage_damped_interval():
    tab = build_tableau(10, 0.05)
    assert tab.beta == pytest.approx(29 / 15, rel=1e-15)
    assert tab.ell >= 193.333


@pytest.mark.parametrize("s", range(1, 51))
def test_undamped_interval_is_two_s_squared(s):
    assert stability_interval(s, 0.0) == pytest.approx(2.0 * s * s, rel=1e-12)


def test_damping_shrinks_interval():
    # oracle: ell = 2 w0 / w1 with w1 = T(w0)/T'(w0), evaluated directly
    w0 = 1.0 + 1.0 / 25
    tr = cheb_eval(5, w0)
    expected = 2 * w0 * tr.d1 / tr.value
    assert stability_interval(5, 1.0) == pytest.approx(expected, rel=1e-13)
    assert stability_interval(5, 1.0) < 50


@pytest.mark.parametrize("eps", [0.0, 0.05, 0.1, 1.0])
def test_interval_bounds(eps):
    for s in range(1, 201):
        tab = build_tableau(s, eps)
        assert tab.omega0 >= 1.0
        assert tab.ell > 0
        assert tab.beta * s * s <= tab.ell * (1 + 1e-12)
        assert tab.ell <= 2.0 * s * s * (1 + 1e-12)


@given(st.integers(2, 60), st.sampled_from([0.0, 0.05, 0.1, 1.0]))
def test_coefficient_formulas(s, eps):
    tab = build_tableau(s, eps)
    tvals = np.array([cheb_eval(j, tab.omega0).value for j in range(s + 1)])
    b = 1.0 / tvals
    assert tab.b == pytest.approx(b, rel=1e-13)
    assert tab.mu[1] == tab.omega1 / tab.omega0
    for j in range(2, s + 1):
        assert tab.mu[j] == pytest.approx(2 * tab.omega1 * b[j] / b[j - 1], rel=1e-13)
        assert tab.nu[j] == pytest.approx(2 * tab.omega0 * b[j] / b[j - 1], rel=1e-13)
        assert tab.kappa[j] == pytest.approx(-b[j] / b[j - 2], rel=1e-13)
        # consistency: nu + kappa = 1 keeps constants fixed
        assert tab.nu[j] + tab.kappa[j] == pytest.approx(1.0, abs=1e-13)


def test_b0_and_b1_are_not_special_cased():
    tab = build_tableau(6, 0.05)
    assert tab.b[0] == 1.0
    assert tab.b[1] == pytest.approx(1.0 / tab.omega0, rel=1e-15)


@given(st.integers(1, 30), st.sampled_from([0.0, 0.05, 1.0]), st.floats(0.0, 1.0))
def test_recurrence_reproduces_stability_polynomial(s, eps, frac):
    tab = build_tableau(s, eps)
    z = -frac * tab.ell
    mu, nu, kappa = tab.mu, tab.nu, tab.kappa
    k_prev, k = 1.0, 1.0 + mu[1] * z
    for j in range(2, s + 1):
        k_prev, k = k, nu[j] * k + kappa[j] * k_prev + mu[j] * z * k
    assert k == pytest.approx(rkc_stability_poly(s, eps, z), rel=1e-12, abs=1e-12)


def test_stage_times_increase_to_one():
    tab = build_tableau(12, 0.05)
    assert tab.c[0] == 0.0
    assert tab.c[-1] == pytest.approx(1.0, rel=1e-14)
    assert np.all(np.diff(tab.c) > 0)


def test_arrays_are_read_only():
    tab = build_tableau(4, 0.05)
    with pytest.raises(ValueError):
        tab.mu[1] = 0.0


@pytest.mark.parametrize("stages", [0, -2, 1.5])
def test_rejects_bad_stage_count(stages):
    with pytest.raises(InvalidInputError):
        build_tableau(stages, 0.0)


@pytest.mark.parametrize("eps", [-0.1, float("nan"), MAX_DAMPING, 3.0])
def test_rejects_bad_damping(eps):
    with pytest.raises(InvalidInputError):
        build_tableau(4, eps)
    with pytest.raises(InvalidInputError):
        damping_beta(eps)


def test_large_stage_counts_stay_finite():
    # T_j(1 + eps/s^2) stays below cosh(sqrt(2 eps)), so no overflow for eps < 1.5
    tab = build_tableau(10_000, 1.4)
    assert np.all(np.isfinite(tab.b)) and np.all(np.isfinite(tab.mu))
    assert tab.b[-1] >= 1.0 / np.cosh(np.sqrt(2 * 1.4)) * (1 - 1e-9)
