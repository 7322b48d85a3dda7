"""Recurrence coefficients of the first-order Runge-Kutta-Chebyshev method.

The same tableau serves the outer ``s``-stage method and the inner
``m``-stage method of the multirate scheme; for the inner method read
``omega0, omega1, b, mu, nu, kappa`` as ``upsilon0, upsilon1, a, alpha,
beta, gamma``.

Arrays are indexed by stage number.  ``b`` and ``c`` have entries
``0..stages``; ``mu``, ``nu`` and ``kappa`` have ``stages + 1`` entries of
which index 0 is unused (zero), and ``nu[1]``, ``kappa[1]`` are unused too.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .cheb import cheb_sequence
from .errors import InvalidInputError, NumericOverflowError


@dataclass(frozen=True, eq=False)
class ChebTableau:
    stages: int
    damping: float
    omega0: float
    omega1: float
    b: np.ndarray
    mu: np.ndarray
    nu: np.ndarray
    kappa: np.ndarray
    c: np.ndarray
    ell: float
    beta: float

    def __repr__(self):
        return (
            f"ChebTableau(stages={self.stages}, damping={self.damping}, "
            f"ell={self.ell:.6g}, beta={self.beta:.6g})"
        )


MAX_DAMPING = 1.5


def damping_beta(damping: float) -> float:
    """Slope ``beta`` of the guaranteed stability interval ``beta * s**2``.

    The linear slope is only positive for ``damping < 1.5``.
    """
    if not 0.0 <= damping < MAX_DAMPING:
        raise InvalidInputError(f"damping must lie in [0, {MAX_DAMPING}), got {damping!r}")
    return 2.0 - 4.0 * damping / 3.0


@lru_cache(maxsize=4096)
def build_tableau(stages: int, damping: float = 0.0) -> ChebTableau:
    """Build the ``stages``-stage RKC tableau with damping ``damping``.

    Tableaus are cached: adaptive stage selection revisits the same few
    stage counts over and over.
    """
    if int(stages) != stages or stages < 1:
        raise InvalidInputError(f"stages must be a positive integer, got {stages!r}")
    if not np.isfinite(damping) or damping < 0:
        raise InvalidInputError(f"damping must be a finite nonnegative number, got {damping!r}")
    s = int(stages)
    damping = float(damping)

    w0 = 1.0 + damping / s**2
    with np.errstate(over="ignore", invalid="ignore"):
        tvals, tders = cheb_sequence(s, w0)
    if not (np.all(np.isfinite(tvals)) and np.all(np.isfinite(tders))):
        raise NumericOverflowError(
            f"T_j(omega0) overflowed for stages={s}, damping={damping}"
        )
    w1 = tvals[s] / tders[s]
    b = 1.0 / tvals

    mu = np.zeros(s + 1)
    nu = np.zeros(s + 1)
    kappa = np.zeros(s + 1)
    mu[1] = w1 / w0
    for j in range(2, s + 1):
        mu[j] = 2.0 * w1 * b[j] / b[j - 1]
        nu[j] = 2.0 * w0 * b[j] / b[j - 1]
        kappa[j] = -b[j] / b[j - 2]
    # stage j reproduces b_j T_j(w0 + w1 z); its time abscissa is the z-slope at 0
    c = w1 * b * tders

    for arr in (b, mu, nu, kappa, c):
        arr.flags.writeable = False
    return ChebTableau(
        stages=s,
        damping=damping,
        omega0=w0,
        omega1=w1,
        b=b,
        mu=mu,
        nu=nu,
        kappa=kappa,
        c=c,
        ell=2.0 * w0 / w1,
        beta=damping_beta(damping),
    )


def stability_interval(stages: int, damping: float = 0.0) -> float:
    """Length ``ell`` of the real stability interval ``[-ell, 0]``."""
    return build_tableau(stages, damping).ell
