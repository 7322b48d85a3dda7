"""Chebyshev polynomials of the first kind and their derivatives.

Everything is evaluated with the three-term recurrence, which stays valid
for ``|x| > 1`` (needed for damped tableaus where ``omega0 > 1``).
Inputs may be scalars or numpy arrays; outputs follow the input shape.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .errors import InvalidInputError

MAX_DEGREE = 10_000


class ChebTriple(NamedTuple):
    """``T_j(x)`` together with its first and second derivative."""

    value: float | np.ndarray
    d1: float | np.ndarray
    d2: float | np.ndarray


def _check(degree, x):
    if int(degree) != degree or degree < 0:
        raise InvalidInputError(f"degree must be a nonnegative integer, got {degree!r}")
    xa = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(xa)):
        raise InvalidInputError("x must be finite")
    return int(degree), xa


def _unwrap(a, scalar):
    return float(a) if scalar else a


def cheb_eval(degree: int, x) -> ChebTriple:
    """Evaluate ``T_degree`` and its first two derivatives at ``x``.

    The value and both derivatives are advanced in a single pass of

        T_j   = 2x T_{j-1}   - T_{j-2}
        T_j'  = 2x T_{j-1}'  + 2 T_{j-1}  - T_{j-2}'
        T_j'' = 2x T_{j-1}'' + 4 T_{j-1}' - T_{j-2}''
    """
    degree, xa = _check(degree, x)
    scalar = xa.ndim == 0
    one = np.ones_like(xa)
    zero = np.zeros_like(xa)
    if degree == 0:
        return ChebTriple(_unwrap(one, scalar), _unwrap(zero, scalar), _unwrap(zero, scalar))

    t0, d0, dd0 = one, zero, zero
    t1, d1, dd1 = xa.copy(), one, zero
    two_x = 2.0 * xa
    for _ in range(2, degree + 1):
        t2 = two_x * t1 - t0
        d2 = two_x * d1 + 2.0 * t1 - d0
        dd2 = two_x * dd1 + 4.0 * d1 - dd0
        t0, d0, dd0 = t1, d1, dd1
        t1, d1, dd1 = t2, d2, dd2
    return ChebTriple(_unwrap(t1, scalar), _unwrap(d1, scalar), _unwrap(dd1, scalar))


def cheb_sequence(degree: int, x: float) -> tuple[np.ndarray, np.ndarray]:
    """Return ``T_j(x)`` and ``T_j'(x)`` for ``j = 0..degree`` at a scalar ``x``."""
    degree, xa = _check(degree, x)
    if xa.ndim != 0:
        raise InvalidInputError("cheb_sequence takes a scalar x")
    xv = float(xa)
    vals = np.empty(degree + 1)
    ders = np.empty(degree + 1)
    vals[0], ders[0] = 1.0, 0.0
    if degree >= 1:
        vals[1], ders[1] = xv, 1.0
    for j in range(2, degree + 1):
        vals[j] = 2.0 * xv * vals[j - 1] - vals[j - 2]
        ders[j] = 2.0 * xv * ders[j - 1] + 2.0 * vals[j - 1] - ders[j - 2]
    return vals, ders


def cheb_derivatives(degree: int, x, order: int) -> list:
    """Return ``[T, T', ..., T^(order)]`` of ``T_degree`` at ``x``.

    Uses the differentiated recurrence
    ``T_j^(k) = 2x T_{j-1}^(k) + 2k T_{j-1}^(k-1) - T_{j-2}^(k)``.
    """
    degree, xa = _check(degree, x)
    if order < 0:
        raise InvalidInputError("order must be nonnegative")
    scalar = xa.ndim == 0
    prev = [np.ones_like(xa)] + [np.zeros_like(xa) for _ in range(order)]
    if degree == 0:
        return [_unwrap(a, scalar) for a in prev]
    cur = [xa.copy(), np.ones_like(xa)] + [np.zeros_like(xa) for _ in range(order - 1)]
    cur = cur[: order + 1]
    two_x = 2.0 * xa
    for _ in range(2, degree + 1):
        nxt = [two_x * cur[0] - prev[0]]
        for k in range(1, order + 1):
            nxt.append(two_x * cur[k] + 2.0 * k * cur[k - 1] - prev[k])
        prev, cur = cur, nxt
    return [_unwrap(a, scalar) for a in cur]
