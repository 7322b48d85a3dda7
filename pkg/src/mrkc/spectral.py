"""Spectral-radius estimation.

``estimate_spectral_radius`` is a nonlinear power method for black-box
right-hand sides: it only needs evaluations of ``rhs`` and forms
Jacobian-vector products by forward differences.  ``dense_spectral_radius``
serves the stability laboratory, where the matrices are small and explicit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EstimationFailedError, InvalidInputError

DEFAULT_SEED = 20_200_412


@dataclass(frozen=True)
class PowerMethodConfig:
    """Settings of the nonlinear power method.

    ``perturbation=None`` selects ``sqrt(eps) * (1 + ||y||)``.
    """

    max_iters: int = 50
    rel_tol: float = 1e-3
    perturbation: float | None = None
    safety: float = 1.05
    seed: int = DEFAULT_SEED

    def __post_init__(self):
        if self.max_iters < 1 or self.rel_tol <= 0:
            raise InvalidInputError("max_iters and rel_tol must be positive")
        if self.perturbation is not None and self.perturbation <= 0:
            raise InvalidInputError("perturbation must be positive")
        if self.safety < 1:
            raise InvalidInputError("safety factor must be >= 1")


@dataclass(frozen=True)
class PowerMethodResult:
    rho: float  # raw estimate, before the safety factor
    vector: np.ndarray
    iterations: int
    converged: bool


def start_vector(n: int, seed: int = DEFAULT_SEED) -> np.ndarray:
    """Deterministic pseudo-random unit vector of length ``n``."""
    v = np.random.default_rng(seed).standard_normal(n)
    return v / np.linalg.norm(v)


def power_method(rhs, t, y, cfg: PowerMethodConfig = PowerMethodConfig(), v0=None) -> PowerMethodResult:
    """Run the forward-difference power iteration for ``d rhs / dy`` at ``(t, y)``.

    ``v0`` overrides the seeded start direction (e.g. to warm-start from the
    previous step's dominant direction).
    """
    y = np.asarray(y, dtype=float)
    n = y.size
    f0 = np.asarray(rhs(t, y), dtype=float)
    if not np.all(np.isfinite(f0)):
        raise EstimationFailedError("rhs is not finite at the base point")
    delta = cfg.perturbation
    if delta is None:
        delta = np.sqrt(np.finfo(float).eps) * (1.0 + np.linalg.norm(y))

    rng = np.random.default_rng(cfg.seed)
    if v0 is None:
        u = start_vector(n, cfg.seed)
    else:
        u = np.asarray(v0, dtype=float).reshape(n)
        u = u / np.linalg.norm(u)

    rho_prev = None
    zero_hits = 0
    for k in range(1, cfg.max_iters + 1):
        fp = np.asarray(rhs(t, y + delta * u), dtype=float)
        if not np.all(np.isfinite(fp)):
            raise EstimationFailedError(f"rhs is not finite at the perturbed point (iteration {k})")
        v = (fp - f0) / delta
        rho = float(np.linalg.norm(v))
        if rho == 0.0:
            zero_hits += 1
            if zero_hits >= 3:
                return PowerMethodResult(0.0, u, k, True)
            u = rng.standard_normal(n)
            u /= np.linalg.norm(u)
            continue
        zero_hits = 0
        u = v / rho
        if rho_prev is not None and abs(rho - rho_prev) <= cfg.rel_tol * rho:
            return PowerMethodResult(rho, u, k, True)
        rho_prev = rho
    return PowerMethodResult(rho_prev if rho_prev is not None else 0.0, u, cfg.max_iters, False)


def estimate_spectral_radius(rhs, t, y, cfg: PowerMethodConfig = PowerMethodConfig()) -> float:
    """Safety-scaled estimate of the spectral radius of the Jacobian of ``rhs``."""
    return cfg.safety * power_method(rhs, t, y, cfg).rho


def _two_by_two_radius(a):
    tr = a[0, 0] + a[1, 1]
    det = a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0]
    disc = 0.25 * tr * tr - det
    if disc >= 0:
        r = np.sqrt(disc)
        half = 0.5 * tr
        # avoid cancellation in the smaller root
        big = half + r if half >= 0 else half - r
        small = det / big if big != 0 else 0.0
        return float(max(abs(big), abs(small)))
    return float(np.sqrt(det))


def dense_spectral_radius(a) -> float:
    """Largest eigenvalue modulus of a small dense matrix.

    2x2 matrices use the closed-form roots; larger ones go through LAPACK.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InvalidInputError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvalidInputError("matrix has non-finite entries")
    n = a.shape[0]
    if n == 0:
        return 0.0
    if n == 1:
        return float(abs(a[0, 0]))
    if n == 2:
        return _two_by_two_radius(a)
    return float(np.max(np.abs(np.linalg.eigvals(a))))
