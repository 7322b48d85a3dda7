import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mrkc.errors import InvalidInputError, PreconditionError, UnsupportedCaseError
from mrkc.problems import RefinedHeat1D, refined_heat_1d
from mrkc.stability import (
    averaged_matrix,
    build_masked_splitting,
    check_curvature_monotone,
    closed_form_inner_step,
    curvature_at,
    default_lambda_grid,
    inner_curvature,
    inner_stability_poly,
    modified_eq_error_bound,
    mrkc_stability_poly,
    phi,
    phi_m,
    rkc_stability_poly,
    scan_phi_continuous,
    scan_phi_window,
    scan_scalar_stability,
    scan_splitting_stability,
    scan_two_by_two,
    speedup_model,
    strict_eta_bound,
)
from mrkc.tableau import build_tableau, damping_beta

mpmath.mp.dps = 60


def mp_phi_m(m, damping, z):
    """High-precision ``(a_m T_m(v0 + v1 z) - 1) / z``.

    For ``|z| <= 1`` the coefficients are recomputed exactly from the rounded
    ``v0``, so ``P_m(0) = 1`` holds.  Further out the result amplifies
    coefficient rounding by about ``|z| T_m'``, so the float coefficients are
    used and the oracle checks only the evaluation.
    """
    tab = build_tableau(m, damping)
    z = mpmath.mpf(z)
    if z == 0:
        return mpmath.mpf(1)
    v0 = mpmath.mpf(tab.omega0)
    if abs(z) <= 1:
        tm = mpmath.chebyt(m, v0)
        v1 = tm / mpmath.diff(lambda x: mpmath.chebyt(m, x), v0)
        a = 1 / tm
    else:
        v1, a = mpmath.mpf(tab.omega1), mpmath.mpf(tab.b[m])
    return (a * mpmath.chebyt(m, v0 + v1 * z) - 1) / z


# ------------------------------------------------------------------ phi


@pytest.mark.parametrize("z,expected", [(0.0, 1.0), (-1.0, 1 - math.exp(-1)), (-2.0, (1 - math.exp(-2)) / 2)])
def test_phi_examples(z, expected):
    assert phi(z) == pytest.approx(expected, rel=1e-15)


@given(st.floats(-1e-3, 1e-3))
def test_phi_matches_high_precision(z):
    exact = float(mpmath.expm1(mpmath.mpf(z)) / z) if z != 0 else 1.0
    assert phi(z) == pytest.approx(exact, rel=1e-14)


def test_phi_vectorised():
    z = np.array([0.0, -1.0, 3.0])
    np.testing.assert_allclose(phi(z), [1.0, 1 - math.exp(-1), math.expm1(3.0) / 3.0], rtol=1e-15)


# ------------------------------------------------------------------ polynomials


@given(st.floats(-50, 0))
def test_inner_poly_low_orders(z):
    assert inner_stability_poly(1, 0.0, z) == pytest.approx(1 + z, rel=1e-13, abs=1e-13)
    assert inner_stability_poly(2, 0.0, z) == pytest.approx(1 + z + z * z / 8, rel=1e-12, abs=1e-12)


def test_inner_poly_at_stability_boundary():
    assert inner_stability_poly(8, 0.0, -128.0) == pytest.approx(1.0, abs=1e-12)


def test_rkc_poly_examples():
    assert rkc_stability_poly(1, 0.0, -0.3) == pytest.approx(0.7, rel=1e-15)
    assert rkc_stability_poly(2, 0.0, -8.0) == pytest.approx(1.0, abs=1e-13)
    ell = build_tableau(10, 0.05).ell
    z = np.linspace(-ell, 0.0, 10_000)
    assert np.max(np.abs(rkc_stability_poly(10, 0.05, z))) <= 1.0 + 1e-12


@pytest.mark.parametrize("damping", [0.0, 0.05, 1.0])
@pytest.mark.parametrize("s", [1, 2, 3, 7, 20, 50])
def test_rkc_poly_bounded_on_linear_interval(s, damping):
    z = np.linspace(-damping_beta(damping) * s * s, 0.0, 4000)
    assert np.max(np.abs(rkc_stability_poly(s, damping, z))) <= 1 + 1e-10


def test_phi_m_examples():
    assert phi_m(1, 0.0, -3.7) == pytest.approx(1.0, rel=1e-15)
    assert phi_m(2, 0.0, -4.0) == pytest.approx(0.5, rel=1e-14)
    for m in (1, 5, 30):
        assert phi_m(m, 0.0, 0.0) == 1.0


@pytest.mark.parametrize("m", [2, 3, 5, 8, 13, 20, 40])
@pytest.mark.parametrize("damping", [0.0, 0.05, 0.1])
def test_phi_m_matches_high_precision(m, damping):
    ell = build_tableau(m, damping).ell
    zs = np.concatenate((-np.geomspace(1e-12, 1.0, 12), np.linspace(-ell, -1.0, 12)))
    for z in zs:
        exact = float(mp_phi_m(m, damping, z))
        assert phi_m(m, damping, z) == pytest.approx(exact, rel=1e-12, abs=1e-14)


@pytest.mark.parametrize("m", range(2, 21))
def test_phi_m_slope_is_half_curvature(m):
    h = 1e-5
    slope = (phi_m(m, 0.05, h) - phi_m(m, 0.05, -h)) / (2 * h)
    assert slope == pytest.approx(inner_curvature(m, 0.05) / 2, rel=1e-6)


@pytest.mark.parametrize("m", [2, 3, 8, 15])
def test_undamped_curvature_closed_form(m):
    assert 2.0 / inner_curvature(m, 0.0) == pytest.approx(6 * m * m / (m * m - 1), rel=1e-12)
    assert curvature_at(m, 1.0) == pytest.approx((m * m - 1) / (3 * m * m), rel=1e-12)


@pytest.mark.parametrize("m", [2, 12])
def test_curvature_monotone(m):
    assert check_curvature_monotone(m, np.linspace(1.0, 1.5, 100))


def test_curvature_grid_validation():
    with pytest.raises(InvalidInputError):
        check_curvature_monotone(3, [1.2, 1.1])
    with pytest.raises(InvalidInputError):
        check_curvature_monotone(3, [0.5, 1.1])


def test_mrkc_poly_trivial_cases():
    assert mrkc_stability_poly(4, 3, 0.05, 0.05, 0.0, 0.0, 1.0, 0.5) == pytest.approx(1.0, abs=1e-14)
    zeta = -7.0
    assert mrkc_stability_poly(4, 3, 0.05, 0.05, 0.0, zeta, 1.0, 0.5) == pytest.approx(
        rkc_stability_poly(4, 0.05, zeta), rel=1e-14
    )


def test_mrkc_poly_stable_at_lower_eta_bound():
    s, m, eps = 5, 3, 0.05
    eta = strict_eta_bound(s, m, eps)
    zeta = -build_tableau(s, eps).ell
    lam = np.linspace(-build_tableau(m, eps).ell / eta, 0.0, 5000)
    vals = np.abs(mrkc_stability_poly(s, m, eps, eps, lam, zeta, 1.0, eta))
    assert vals.max() <= 1.0 + 1e-12


def test_closed_form_inner_step():
    m, eta, lam, zeta = 4, 0.3, -20.0, -1.5
    expected = inner_stability_poly(m, 0.05, eta * lam) + phi_m(m, 0.05, eta * lam) * eta * zeta
    assert closed_form_inner_step(m, 0.05, lam, zeta, eta, 2.0) == pytest.approx(2 * expected, rel=1e-15)


# ------------------------------------------------------------------ scalar scans


@pytest.mark.parametrize("s", range(2, 11))
def test_scalar_scan_inside_region(s):
    m, eps = 4, 0.05
    eta = strict_eta_bound(s, m, eps)
    zetas = np.linspace(-build_tableau(s, eps).ell, 0.0, 21)
    lams = np.linspace(-build_tableau(m, eps).ell / eta, 0.0, 101)
    res = scan_scalar_stability(s, m, (eps, eps), 1.0, eta, zetas, lams)
    assert res.max_excess() <= 1e-10
    assert len(res.records) == zetas.size * lams.size


def test_scalar_scan_zero_zeta_stable():
    eta = strict_eta_bound(6, 3, 0.05)
    res = scan_scalar_stability(6, 3, (0.05, 0.05), 1.0, eta, [0.0], np.linspace(-5.0, 0.0, 50))
    assert res.max_excess() <= 1e-10


def test_scalar_scan_halved_eta_is_unstable():
    s, m, eps = 6, 5, 0.05
    eta = 0.5 * strict_eta_bound(s, m, eps)
    zeta = -build_tableau(s, eps).ell
    lams = np.linspace(-build_tableau(m, eps).ell / eta, 0.0, 2001)
    res = scan_scalar_stability(s, m, (eps, eps), 1.0, eta, [zeta], lams, enforce_region=False)
    assert res.max_excess() > 0


@pytest.mark.parametrize(
    "kwargs,message",
    [
        (dict(zeta_grid=[-1e4]), "tau"),
        (dict(lambda_grid=[-1e6]), "eta"),
        (dict(eta=1e-3), "eta >="),
    ],
)
def test_scalar_scan_preconditions(kwargs, message):
    s, m = 4, 3
    args = dict(
        s=s, m=m, dampings=(0.05, 0.05), tau=1.0, eta=strict_eta_bound(s, m, 0.05),
        zeta_grid=[-1.0], lambda_grid=[-1.0],
    )
    args.update(kwargs)
    with pytest.raises(PreconditionError, match=message):
        scan_scalar_stability(**args)


def test_scalar_scan_rejects_positive_eigenvalues():
    with pytest.raises(InvalidInputError):
        scan_scalar_stability(3, 2, (0.05, 0.05), 1.0, 1.0, [1.0], [0.0])


# ------------------------------------------------------------------ window scans


@pytest.mark.parametrize("m", [2, 3, 6, 10])
def test_window_holds_at_boundary(m):
    res = scan_phi_window(m, 0.0, -6 * m * m / (m * m - 1))
    assert res.min_gap >= -1e-9
    assert res.holds


@pytest.mark.parametrize("m", [2, 3, 6, 10])
def test_window_fails_below_boundary(m):
    res = scan_phi_window(m, 0.0, -0.95 * 6 * m * m / (m * m - 1))
    assert res.min_gap < 0
    # the violation sits next to the origin
    worst = max(res.result.records, key=lambda r: r.excess)
    assert worst.abscissa > -0.5 * build_tableau(m, 0.0).ell


def test_window_two_stage_example():
    assert scan_phi_window(2, 0.0, -8.0).min_gap >= -1e-9


def test_window_grid_precondition():
    with pytest.raises(PreconditionError):
        scan_phi_window(3, 0.0, -6.0, z_grid=[0.5])


def test_phi_continuous_examples():
    assert scan_phi_continuous(2.0, -1.0)
    assert not scan_phi_continuous(1.9, -1.0)
    assert scan_phi_continuous(0.1, -1.0, [0.0])
    with pytest.raises(PreconditionError):
        scan_phi_continuous(2.0, -1.0, [1.0])


def test_phi_window_for_continuous_function():
    z = default_lambda_grid()
    for w in (-2.0, -5.0, -100.0):
        v = np.asarray(phi(z)) * (z + w)
        assert np.all(v >= w - 1e-12 * abs(w)) and np.all(v <= 1e-12)
    v = np.asarray(phi(z)) * (z - 1.9)
    assert np.any(v < -1.9)


# ------------------------------------------------------------------ matrices


def test_masked_splitting_parts():
    A = np.arange(9.0).reshape(3, 3)
    split = build_masked_splitting(A, [True, False, True])
    np.testing.assert_array_equal(split.A_fast + split.A_slow, A)
    np.testing.assert_array_equal(split.A_fast[1], 0.0)
    np.testing.assert_array_equal(split.A_fast[[0, 2]], A[[0, 2]])


@pytest.mark.parametrize("A,mask", [(np.ones((2, 3)), [True, False]), (np.eye(3), [True, False])])
def test_masked_splitting_validation(A, mask):
    with pytest.raises(InvalidInputError):
        build_masked_splitting(A, mask)


def test_averaged_matrix_diagonal(rng):
    lam = -rng.uniform(0, 50, 5)
    zeta = -rng.uniform(0, 5, 5)
    A = np.diag(lam + zeta)
    # rows of the fast part carry lam only, so build it by hand
    split = build_masked_splitting(A, np.ones(5, bool))
    split = type(split)(A, np.diag(lam), np.diag(zeta), split.mask)
    eta, m = 0.2, 4
    got = averaged_matrix(split, eta, m, 0.05)
    expected = np.diag(np.asarray(phi_m(m, 0.05, eta * lam)) * (lam + zeta))
    np.testing.assert_allclose(got, expected, rtol=1e-12, atol=1e-12 * np.abs(expected).max())


def test_averaged_matrix_single_inner_stage_is_identity_map(rng):
    A = -np.abs(rng.standard_normal((4, 4)))
    split = build_masked_splitting(A, [True, False, True, False])
    np.testing.assert_allclose(averaged_matrix(split, 0.3, 1, 0.0), A, rtol=1e-13, atol=1e-13)


def test_averaged_matrix_decoupled_two_by_two():
    lam, zeta, eta, m = -30.0, -2.0, 0.1, 5
    split = build_masked_splitting([[zeta, 0.0], [0.0, lam]], [False, True])
    got = averaged_matrix(split, eta, m, 0.05)
    assert got[0, 0] == pytest.approx(zeta, rel=1e-12)
    assert got[1, 1] == pytest.approx(phi_m(m, 0.05, eta * lam) * lam, rel=1e-12)
    assert got[0, 1] == 0.0 and got[1, 0] == 0.0


def test_averaged_matrix_rejects_bad_eta():
    split = build_masked_splitting(np.eye(2), [True, False])
    with pytest.raises(InvalidInputError):
        averaged_matrix(split, 0.0, 2, 0.0)


# ------------------------------------------------------------------ 2x2 and splitting scans


def test_two_by_two_stable_at_bound():
    res = scan_two_by_two(n_points=400)
    assert res.max_excess() <= 1e-9


def test_two_by_two_unstable_below_bound():
    res = scan_two_by_two(eta_factor=0.9, n_points=400)
    assert res.max_excess() > 0
    bad = res.abscissae()[res.excess() > 0]
    assert bad.max() > -1.0 and bad.min() > -0.25 * build_tableau(8, 0.05).ell


def test_two_by_two_without_coupling_matches_scalar():
    res = scan_two_by_two(sigma_factor=0.0, n_points=50)
    eta = res.parameters["eta"]
    zeta = -build_tableau(10, 0.05).ell
    for r in res.records:
        lam = r.abscissa / eta
        modes = [abs(eta * zeta), abs(eta * phi_m(8, 0.05, r.abscissa) * lam)]
        assert r.value == pytest.approx(max(modes), rel=1e-10)


def test_splitting_scan_refined_heat():
    prob = refined_heat_1d(RefinedHeat1D(refine_levels=2))
    split = prob.split
    tau = 0.01
    beta = damping_beta(0.05)
    rho_s = float(np.max(np.abs(np.linalg.eigvals(split.A_slow))))
    s = math.ceil(math.sqrt(tau * rho_s / beta))
    res = scan_splitting_stability(split, tau, s, n_points=100)
    big = [r for r in res.records if abs(r.abscissa) >= 2]
    assert big and max(r.excess for r in big) <= 1e-9 * beta * s * s


def test_splitting_scan_preconditions():
    A = np.diag([-1.0, -100.0])
    with pytest.raises(PreconditionError):
        scan_splitting_stability(build_masked_splitting(A, [True, True]), 0.1, 1)
    with pytest.raises(PreconditionError):
        scan_splitting_stability(build_masked_splitting(A, [False, True]), 10.0, 1)
    with pytest.raises(PreconditionError):
        scan_splitting_stability(build_masked_splitting(A, [False, True]), 0.1, 2, etabar_grid=[10.0])


# ------------------------------------------------------------------ speed-up and error bound


def test_speedup_examples():
    assert speedup_model(0.3, 0.0).S == 1.0
    assert speedup_model(0.5, 8.0).c_fast_max == pytest.approx(0.5, rel=1e-15)
    assert speedup_model(0.0, 64.0).S == pytest.approx(math.sqrt(65.0), rel=1e-15)


@given(st.floats(0.0, 1e4), st.floats(0.0, 0.99))
def test_speedup_monotone_in_cost_share(r, c):
    assert speedup_model(0.0, r).S == math.sqrt(1.0 + r)
    if r > 1e-6:
        assert speedup_model(c + 0.01, r).S < speedup_model(c, r).S


def test_speedup_validation():
    with pytest.raises(InvalidInputError):
        speedup_model(1.5, 1.0)
    with pytest.raises(InvalidInputError):
        speedup_model(0.5, -1.0)


def test_error_bound_small_eta():
    eb = modified_eq_error_bound([-100.0, -3.0], [-1.0, -2.0], 1e-12, 1.0, [1.0, 1.0])
    assert eb.gap <= 1e-9 and eb.gap <= eb.bound + 1e-15 and eb.bound <= 1e-8


def test_error_bound_zero_fast_part():
    eb = modified_eq_error_bound([0.0, 0.0], [-1.0, -2.0], 0.5, 1.0, [1.0, 2.0])
    assert eb.gap == 0.0


def test_error_bound_random(rng):
    for _ in range(20):
        lam = -rng.uniform(0, 1e3, 6)
        zeta = -rng.uniform(0, 10, 6)
        eb = modified_eq_error_bound(lam, zeta, 2 / np.max(-zeta), 1.0, rng.standard_normal(6))
        assert eb.gap <= eb.bound * (1 + 1e-12)


def test_error_bound_is_sharp_for_one_component():
    lam, zeta, eta = -500.0, -4.0, 0.5
    eb = modified_eq_error_bound([lam], [zeta], eta, 1.0, [1.0])
    assert eb.bound == pytest.approx(eb.gap, rel=1e-11)


def test_error_bound_rejects_non_diagonal():
    with pytest.raises(UnsupportedCaseError):
        modified_eq_error_bound([[-1.0, 1.0], [0.0, -1.0]], [-1.0, -1.0], 0.1, 1.0, [1.0, 1.0])
