"""Stability laboratory.

Computable versions of the analytical objects behind the multirate scheme:
the phi-function of the modified equation, the inner and outer stability
polynomials, the averaged matrix, real-axis stability scans, the error bound
of the modified equation and the cost model.

Notation used throughout: ``lam`` is a fast eigenvalue, ``zeta`` a slow one,
``z = eta * lam`` and ``w = eta * zeta`` (or ``w = -eta * beta * s**2 / tau``
for splitting scans; stored with its sign, compared via ``|w|``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from math import factorial

import numpy as np
from scipy import integrate as sp_integrate

from .cheb import cheb_derivatives, cheb_eval
from .errors import InvalidInputError, PreconditionError, UnsupportedCaseError
from .integrators import (
    RELAXED_INNER_DAMPING,
    MrkcParameters,
    SplitSystem,
    averaged_force,
)
from .records import ScanRecord, ScanResult
from .spectral import dense_spectral_radius
from .tableau import build_tableau, damping_beta

PHI_SERIES_RADIUS = 1e-4
PHI_M_SERIES_RADIUS = 1.0
_PHI_M_TERMS = 14


def _as_out(z, arr):
    return float(arr) if np.ndim(z) == 0 else arr


# ------------------------------------------------------------------ scalars


def phi(z):
    """``(exp(z) - 1) / z`` with ``phi(0) = 1``; a Taylor branch handles ``|z| < 1e-4``."""
    za = np.asarray(z, dtype=float)
    small = np.abs(za) < PHI_SERIES_RADIUS
    safe = np.where(small, 1.0, za)
    direct = np.expm1(safe) / safe
    series = 1.0 + za * (0.5 + za * (1.0 / 6.0 + za / 24.0))
    return _as_out(z, np.where(small, series, direct))


def inner_stability_poly(m: int, damping: float, z):
    """Stability polynomial ``a_m T_m(v0 + v1 z)`` of the ``m``-stage method."""
    tab = build_tableau(m, damping)
    x = tab.omega0 + tab.omega1 * np.asarray(z, dtype=float)
    return _as_out(z, tab.b[m] * np.asarray(cheb_eval(m, x).value))


def rkc_stability_poly(s: int, damping: float, z):
    """Stability polynomial of the ``s``-stage RKC method (same form as the inner one)."""
    return inner_stability_poly(s, damping, z)


@lru_cache(maxsize=1024)
def _phi_m_coeffs(m: int, damping: float) -> np.ndarray:
    """Taylor coefficients of ``(P_m(z) - 1) / z`` about 0, lowest order first."""
    tab = build_tableau(m, damping)
    order = min(m, _PHI_M_TERMS)
    ders = cheb_derivatives(m, tab.omega0, order)
    c = np.array(
        [tab.b[m] * ders[k] * tab.omega1**k / factorial(k) for k in range(1, order + 1)]
    )
    c.flags.writeable = False
    return c


def phi_m(m: int, damping: float, z):
    """``Phi_m(z) = (P_m(z) - 1) / z`` with ``Phi_m(0) = 1``.

    For ``|z| <= 1`` a truncated Taylor series is used; its coefficients
    decay faster than ``1 / (k! (2k-1)!!)``, so 14 terms are exact to
    rounding while the direct quotient would lose digits to cancellation.
    """
    za = np.asarray(z, dtype=float)
    small = np.abs(za) <= PHI_M_SERIES_RADIUS
    coeffs = _phi_m_coeffs(m, damping)
    series = np.polynomial.polynomial.polyval(za, coeffs)
    safe = np.where(small, 1.0, za)
    direct = (np.asarray(inner_stability_poly(m, damping, safe)) - 1.0) / safe
    return _as_out(z, np.where(small, series, direct))


def inner_curvature(m: int, damping: float) -> float:
    """``P_m''(0) = a_m T_m''(v0) v1**2``; the window condition needs ``|w| >= 2 / P_m''(0)``."""
    tab = build_tableau(m, damping)
    return float(tab.b[m] * cheb_eval(m, tab.omega0).d2 * tab.omega1**2)


def curvature_at(m: int, v0) -> np.ndarray | float:
    """``T_m(v0) T_m''(v0) / T_m'(v0)**2``, the inner curvature as a function of ``v0``."""
    tr = cheb_eval(m, v0)
    return tr.value * tr.d2 / tr.d1**2


def check_curvature_monotone(m: int, v0_grid) -> bool:
    """True iff the inner curvature is non-decreasing along an increasing ``v0`` grid."""
    grid = np.asarray(v0_grid, dtype=float)
    if grid.ndim != 1 or np.any(np.diff(grid) <= 0) or grid.size and grid[0] < 1:
        raise InvalidInputError("v0 grid must be increasing and start at or above 1")
    vals = np.atleast_1d(curvature_at(m, grid))
    tol = 1e-13 * np.abs(vals[:-1])
    return bool(np.all(np.diff(vals) >= -tol))


def mrkc_stability_poly(s, m, outer_damping, inner_damping, lam, zeta, tau, eta):
    """``R_s(tau Phi_m(eta lam) (lam + zeta))``; ``eta = 0`` means the averaged force is ``f``."""
    lam = np.asarray(lam, dtype=float)
    zeta = np.asarray(zeta, dtype=float)
    factor = 1.0 if eta == 0 else phi_m(m, inner_damping, eta * lam)
    out = rkc_stability_poly(s, outer_damping, tau * factor * (lam + zeta))
    return out if (lam.ndim or zeta.ndim) else float(out)


def closed_form_inner_step(m, damping, lam, zeta, eta, y=1.0):
    """``u_eta`` for the scalar test problem: ``(P_m(eta lam) + Phi_m(eta lam) eta zeta) y``."""
    z = eta * lam
    return (inner_stability_poly(m, damping, z) + phi_m(m, damping, z) * eta * zeta) * y


# ------------------------------------------------------------------ matrices


@dataclass(frozen=True, eq=False)
class MatrixSplitting:
    """Row splitting ``A = D A + (I - D) A`` by a boolean mask (diagonal of ``D``)."""

    A: np.ndarray
    A_fast: np.ndarray
    A_slow: np.ndarray
    mask: np.ndarray

    @property
    def dim(self) -> int:
        return self.A.shape[0]

    def system(self) -> SplitSystem:
        """Linear split system ``f_F(y) = A_F y``, ``f_S(y) = A_S y`` (acts column-wise)."""
        af, as_ = self.A_fast, self.A_slow
        return SplitSystem(
            fast=lambda t, y: af @ y,
            slow=lambda t, y: as_ @ y,
            dim=self.dim,
            rho_fast=lambda t, y: dense_spectral_radius(af),
            rho_slow=lambda t, y: dense_spectral_radius(as_),
            rho_full=lambda t, y: dense_spectral_radius(self.A),
        )


def build_masked_splitting(A, mask) -> MatrixSplitting:
    """Split ``A`` by rows: masked rows go to the fast part, the rest to the slow part."""
    A = np.array(A, dtype=float)
    mask = np.asarray(mask, dtype=bool)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise InvalidInputError(f"expected a square matrix, got shape {A.shape}")
    if mask.shape != (A.shape[0],):
        raise InvalidInputError(f"mask length {mask.size} does not match matrix size {A.shape[0]}")
    af = np.where(mask[:, None], A, 0.0)
    as_ = np.where(mask[:, None], 0.0, A)
    for arr in (A, af, as_, mask):
        arr.flags.writeable = False
    return MatrixSplitting(A, af, as_, mask)


def averaged_matrix(split: MatrixSplitting, eta: float, m: int, damping: float) -> np.ndarray:
    """``Phi_m(eta A_F) A``, built by running the inner solve on every unit vector."""
    if not eta > 0:
        raise InvalidInputError("eta must be positive")
    n = split.dim
    if split.A_fast.shape != (n, n) or split.A_slow.shape != (n, n):
        raise InvalidInputError("split matrices have inconsistent shapes")
    params = MrkcParameters(1, int(m), float(eta), 1.0, "strict", 0.0, float(damping))
    return averaged_force(split.system(), 0.0, np.eye(n), params)


# ------------------------------------------------------------------ scans


def _stability_interval(stages, damping):
    return build_tableau(stages, damping).ell


def strict_eta_bound(s, m, damping, tau=1.0) -> float:
    """Lower bound ``6 tau / ell_s * m**2 / (m**2 - 1)`` on ``eta``."""
    if m < 2:
        return math.inf
    return 6.0 * tau / _stability_interval(s, damping) * m * m / (m * m - 1)


def scan_scalar_stability(
    s, m, dampings, tau, eta, zeta_grid, lambda_grid, enforce_region=True
) -> ScanResult:
    """``|R_{s,m}|`` on every ``(zeta, lam)`` cell of two grids.

    ``dampings`` is ``(outer, inner)``.  With ``enforce_region`` the grids
    must lie where stability is guaranteed: ``tau |zeta| <= ell_s``,
    ``eta |lam| <= ell_m`` and ``eta >= 6 tau / ell_s * m^2 / (m^2 - 1)``.
    """
    outer, inner = dampings
    zetas = np.asarray(zeta_grid, dtype=float).ravel()
    lams = np.asarray(lambda_grid, dtype=float).ravel()
    if np.any(zetas > 0) or np.any(lams > 0):
        raise InvalidInputError("eigenvalues must be nonpositive")
    ell_s = _stability_interval(s, outer)
    ell_m = _stability_interval(m, inner)
    if enforce_region:
        if tau * np.max(-zetas, initial=0.0) > ell_s * (1 + 1e-14):
            raise PreconditionError("tau*|zeta| <= ell_s violated")
        if eta * np.max(-lams, initial=0.0) > ell_m * (1 + 1e-14):
            raise PreconditionError("eta*|lambda| <= ell_m violated")
        if eta < strict_eta_bound(s, m, outer, tau) * (1 - 1e-14):
            raise PreconditionError("eta >= 6*tau/ell_s * m^2/(m^2-1) violated")
    ZZ, LL = np.meshgrid(zetas, lams, indexing="ij")
    vals = np.abs(mrkc_stability_poly(s, m, outer, inner, LL, ZZ, tau, eta))
    recs = [
        ScanRecord(float(l), float(v), 1.0, float(zv))
        for zv, row_l, row_v in zip(zetas, LL, vals)
        for l, v in zip(row_l, row_v)
    ]
    return ScanResult(
        "scalar", recs, dict(s=s, m=m, outer_damping=outer, inner_damping=inner, tau=tau, eta=eta)
    )


@dataclass(frozen=True)
class WindowResult:
    min_gap: float  # min over the grid of Phi_m(z)(z + w) - w
    max_value: float  # max over the grid of Phi_m(z)(z + w)
    result: ScanResult

    @property
    def holds(self) -> bool:
        return self.min_gap >= -1e-9 and self.max_value <= 1e-9


def scan_phi_window(m, damping, w, z_grid=None) -> WindowResult:
    """Check ``Phi_m(z)(z + w) in [w, 0]`` on a grid of ``[-ell_m, 0]``."""
    ell_m = _stability_interval(m, damping)
    if z_grid is None:
        z_grid = np.linspace(-ell_m, 0.0, 10_001)
    z = np.asarray(z_grid, dtype=float)
    if np.any(z > 0) or np.any(z < -ell_m * (1 + 1e-12)):
        raise PreconditionError("z grid must lie in [-ell_m, 0]")
    val = np.asarray(phi_m(m, damping, z)) * (z + w)
    recs = [ScanRecord(float(a), float(w - v), 0.0, float(w)) for a, v in zip(z, val)]
    return WindowResult(
        float(np.min(val - w)),
        float(np.max(val)),
        ScanResult("phi-window", recs, dict(m=m, damping=damping, w=w)),
    )


def default_lambda_grid(n_log=2000, lo=1e-8, hi=1e6) -> np.ndarray:
    """Zero plus a geometric grid of negative values from ``-lo`` to ``-hi``."""
    return np.concatenate(([0.0], -np.geomspace(lo, hi, n_log)))


def phi_continuous_values(eta, zeta, lambda_grid) -> np.ndarray:
    lam = np.asarray(lambda_grid, dtype=float)
    return np.asarray(phi(eta * lam)) * (lam + zeta)


def scan_phi_continuous(eta, zeta, lambda_grid=None, rtol=1e-12) -> bool:
    """True iff ``phi(eta lam)(lam + zeta)`` lies in ``[zeta, 0]`` on the whole grid."""
    if lambda_grid is None:
        lambda_grid = default_lambda_grid()
    lam = np.asarray(lambda_grid, dtype=float)
    if np.any(lam > 0):
        raise PreconditionError("lambda grid must be nonpositive")
    val = phi_continuous_values(eta, zeta, lam)
    tol = rtol * abs(zeta)
    return bool(np.all(val >= zeta - tol) and np.all(val <= tol))


def two_by_two_matrix(lam, zeta, sigma) -> np.ndarray:
    return np.array([[zeta, sigma], [sigma, lam]], dtype=float)


TWO_BY_TWO_MASK = np.array([False, True])


def scan_two_by_two(
    s=10, m=8, damping=0.05, tau=1.0, sigma_factor=0.1, eta_factor=1.0, z_grid=None, n_points=1000
) -> ScanResult:
    """``eta rho(A_eta)`` against ``|w| = eta |zeta|`` along ``z = eta lam``.

    ``zeta = -ell_s / tau`` and ``eta`` is ``eta_factor`` times the strict
    lower bound.  The coupling is ``sigma = sigma_factor sqrt(lam zeta)``.
    """
    ell_s = _stability_interval(s, damping)
    ell_m = _stability_interval(m, damping)
    zeta = -ell_s / tau
    eta = eta_factor * strict_eta_bound(s, m, damping, tau)
    if z_grid is None:
        z_grid = np.linspace(-ell_m, 0.0, n_points)
    z_grid = np.asarray(z_grid, dtype=float)
    w_abs = eta * abs(zeta)
    recs = []
    for z in z_grid:
        lam = z / eta
        sigma = sigma_factor * math.sqrt(lam * zeta)
        split = build_masked_splitting(two_by_two_matrix(lam, zeta, sigma), TWO_BY_TWO_MASK)
        a_eta = averaged_matrix(split, eta, m, damping)
        recs.append(ScanRecord(float(z), eta * dense_spectral_radius(a_eta), w_abs, eta))
    return ScanResult(
        "two-by-two",
        recs,
        dict(s=s, m=m, damping=damping, tau=tau, sigma_factor=sigma_factor, eta_factor=eta_factor, eta=eta),
    )


def scan_splitting_stability(
    split: MatrixSplitting,
    tau: float,
    s: int,
    damping: float = 0.05,
    etabar_grid=None,
    inner_damping: float = RELAXED_INNER_DAMPING,
    n_points: int = 200,
) -> ScanResult:
    """``tau rho(Abar_eta)`` against ``w(etabar) = -etabar beta s^2 / tau``.

    For each ``etabar`` the inner stage count ``mbar`` is the smallest integer
    with ``etabar rho_F <= betabar mbar^2``, and
    ``Abar_eta = Phi_mbar(etabar A_F) A``.  Stability holds where the value
    stays below ``beta s^2``.
    """
    beta = damping_beta(damping)
    betabar = damping_beta(inner_damping)
    bs2 = beta * s * s
    rho_f = dense_spectral_radius(split.A_fast)
    rho_s = dense_spectral_radius(split.A_slow)
    if rho_s == 0 or rho_f == 0:
        raise PreconditionError("degenerate splitting: both rho(A_F) and rho(A_S) must be positive")
    if tau * rho_s > bs2:
        raise PreconditionError("tau*rho(A_S) <= beta*s^2 violated")
    m_strict = max(2, math.ceil(math.sqrt(6 * tau * rho_f / (beta * bs2) + 1)))
    while 6 * tau * rho_f > beta * bs2 * (m_strict**2 - 1):
        m_strict += 1
    eta_strict = 6 * tau / bs2 * m_strict**2 / (m_strict**2 - 1)
    if etabar_grid is None:
        etabar_grid = np.linspace(eta_strict / n_points, eta_strict, n_points)
    grid = np.asarray(etabar_grid, dtype=float)
    if np.any(grid <= 0) or np.any(grid > eta_strict * (1 + 1e-12)):
        raise PreconditionError("etabar grid must lie in (0, eta_strict]")
    recs = []
    for etabar in grid:
        mbar = max(1, math.ceil(math.sqrt(etabar * rho_f / betabar)))
        while etabar * rho_f > betabar * mbar * mbar:
            mbar += 1
        a_bar = averaged_matrix(split, etabar, mbar, inner_damping)
        recs.append(
            ScanRecord(float(-etabar * bs2 / tau), tau * dense_spectral_radius(a_bar), bs2, float(etabar))
        )
    return ScanResult(
        "splitting",
        recs,
        dict(tau=tau, s=s, damping=damping, inner_damping=inner_damping, eta_strict=eta_strict,
             rho_fast=rho_f, rho_slow=rho_s),
    )


# ------------------------------------------------------------------ theory checks


@dataclass(frozen=True)
class SpeedupResult:
    S: float
    S_relaxed: float
    c_fast_max: float


def speedup_model(c_fast: float, rho_ratio: float) -> SpeedupResult:
    """Cost-model speed-ups of the multirate scheme over plain RKC.

    Stage counts are treated as reals with ``beta = 2``.  Strict conditions
    give ``m = sqrt(1 + 3 r)``; the relaxed ones give
    ``m = max(1, sqrt(2 r / betabar))`` with ``betabar = 2 - 4 * 0.1 / 3``.
    """
    if not 0.0 <= c_fast <= 1.0:
        raise InvalidInputError("c_fast must lie in [0, 1]")
    if not rho_ratio >= 0:
        raise InvalidInputError("rho_ratio must be nonnegative")
    r = float(rho_ratio)
    root = math.sqrt(1.0 + r)
    m_strict = math.sqrt(1.0 + 3.0 * r)
    S = root / (1.0 + c_fast * (m_strict - 1.0))
    m_relaxed = max(1.0, math.sqrt(2.0 * r / damping_beta(RELAXED_INNER_DAMPING)))
    S_relaxed = root / (1.0 + c_fast * (m_relaxed - 1.0))
    # (root - 1) / (m_strict - 1) without the cancellation at small r
    c_max = (m_strict + 1.0) / (3.0 * (root + 1.0)) if r > 0 else 0.0
    return SpeedupResult(S, S_relaxed, c_max)


def _diagonal(v, name):
    a = np.asarray(v, dtype=float)
    if a.ndim == 2:
        if a.shape[0] != a.shape[1] or np.any(a - np.diag(np.diag(a))):
            raise UnsupportedCaseError(f"{name} must be diagonal")
        a = np.diag(a).copy()
    if a.ndim != 1:
        raise UnsupportedCaseError(f"{name} must be a vector or a diagonal matrix")
    if np.any(a > 0):
        raise InvalidInputError(f"{name} must be nonpositive")
    return a


@dataclass(frozen=True)
class ErrorBound:
    gap: float
    bound: float


def modified_eq_error_bound(lam, zeta, eta, t, y0) -> ErrorBound:
    """Compare ``y`` and the modified-equation solution ``y_eta`` for a diagonal system.

    Both are exact exponentials.  The bound is
    ``max|1 - phi(eta lam)| * int_0^t exp(mu_eta (t - r)) |f(y(r))| dr``
    with ``mu = max(lam + zeta)`` and ``mu_eta = mu * min phi(eta lam)``.
    """
    lam = _diagonal(lam, "lambda")
    zeta = _diagonal(zeta, "zeta")
    y0 = np.asarray(y0, dtype=float)
    if not (lam.shape == zeta.shape == y0.shape):
        raise InvalidInputError("lambda, zeta and y0 must have the same length")
    ph = np.asarray(phi(eta * lam))
    k = lam + zeta
    gap = float(np.linalg.norm(y0 * np.exp(k * t) - y0 * np.exp(ph * k * t)))
    mu = float(np.max(k))
    mu_eta = mu * float(np.min(ph))
    delta = float(np.max(np.abs(1.0 - ph)))

    def integrand(r):
        return math.exp(mu_eta * (t - r)) * float(np.linalg.norm(k * y0 * np.exp(k * r)))

    if delta == 0.0 or t == 0:
        return ErrorBound(gap, 0.0)
    integral, _ = sp_integrate.quad(integrand, 0.0, t, epsabs=0.0, epsrel=1e-12, limit=200)
    return ErrorBound(gap, delta * integral)
