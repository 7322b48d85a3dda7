"""Test problems as split systems.

Each constructor returns a :class:`Problem` bundling the split system,
initial data, time interval, error norm and (where available) the exact
solution.  ``PROBLEMS`` maps CLI names to default constructors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import InvalidInputError
from .integrators import SplitSystem
from .spectral import dense_spectral_radius
from .stability import MatrixSplitting, build_masked_splitting, two_by_two_matrix


def max_norm(e) -> float:
    return float(np.max(np.abs(e)))


@dataclass
class Problem:
    name: str
    system: SplitSystem
    y0: np.ndarray
    t0: float
    t_end: float
    kind: str  # "ode" or "pde"
    norm: Callable = max_norm
    exact: Callable | None = None  # exact(t) -> state
    split: MatrixSplitting | None = None
    extras: dict = field(default_factory=dict)
    rk4: Callable | None = None  # rk4(t_end, tau) -> state, a faster equivalent of rk4_reference

    def error(self, y, y_ref) -> float:
        return self.norm(np.asarray(y) - np.asarray(y_ref))


# ------------------------------------------------------------------ Robertson

ROBERTSON_Y0 = np.array([1.0, 2e-5, 0.1])

# Power-method safety factor for Robertson runs.  The stiff eigenvalue scales
# with y2, which swings during the internal stages of a long Chebyshev step;
# with the generic 1.05 margin fixed-step runs at tau ~ 1 can leave the
# stability interval and blow up.
ROBERTSON_SAFETY = 2.2


def robertson_fast(t, y):
    return np.array([0.0, -1e4 * y[1] * y[2], 0.0])


def robertson_slow(t, y):
    r1 = 0.04 * y[0]
    r2 = 1e4 * y[1] * y[2]
    r3 = 3e7 * y[1] * y[1]
    return np.array([-r1 + r2, r1 - r3, r3])


def robertson_reference(t_end: float = 100.0, tau: float = 1e-4, y0=ROBERTSON_Y0) -> np.ndarray:
    """Classical RK4 on the full Robertson system with plain floats.

    Same arithmetic as ``rk4_reference`` but about ten times faster for this
    3-component system, which makes ``tau = 1e-4`` over ``[0, 100]`` cheap.
    """
    n_steps = max(1, math.ceil(t_end / tau - 1e-10))
    a, b, c = (float(v) for v in y0)

    def f(a, b, c):
        r1 = 0.04 * a
        r2 = 1e4 * b * c
        r3 = 3e7 * b * b
        return -r1 + r2, r1 - r2 - r3, r3

    t = 0.0
    for n in range(n_steps):
        h = tau if n < n_steps - 1 else t_end - t
        hh = 0.5 * h
        k1 = f(a, b, c)
        k2 = f(a + hh * k1[0], b + hh * k1[1], c + hh * k1[2])
        k3 = f(a + hh * k2[0], b + hh * k2[1], c + hh * k2[2])
        k4 = f(a + h * k3[0], b + h * k3[1], c + h * k3[2])
        h6 = h / 6.0
        a = a + h6 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0])
        b = b + h6 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1])
        c = c + h6 * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2])
        t = (n + 1) * tau if n < n_steps - 1 else t_end
    return np.array([a, b, c])


def robertson_system(t_end: float = 100.0) -> Problem:
    """Robertson kinetics with the stiff ``y2 y3`` term in the fast part.

    Spectral radii come from the power method (no analytic callbacks).
    """
    sys = SplitSystem(robertson_fast, robertson_slow, dim=3, name="robertson")
    return Problem(
        "robertson", sys, ROBERTSON_Y0.copy(), 0.0, t_end, "ode",
        rk4=lambda t_end, tau: robertson_reference(t_end, tau),
    )


# ------------------------------------------------------------------ linear test problems


def multirate_test_system(lam: float, zeta: float, y0: float = 1.0, t_end: float = 1.0) -> Problem:
    """Scalar ``y' = lam y + zeta y`` with ``lam`` fast and ``zeta`` slow."""
    if lam > 0 or zeta > 0:
        raise InvalidInputError("lam and zeta must be nonpositive")
    lam, zeta = float(lam), float(zeta)
    sys = SplitSystem(
        fast=lambda t, y: lam * y,
        slow=lambda t, y: zeta * y,
        dim=1,
        rho_fast=lambda t, y: abs(lam),
        rho_slow=lambda t, y: abs(zeta),
        rho_full=lambda t, y: abs(lam + zeta),
        name="multirate-test",
    )
    return Problem(
        "multirate-test",
        sys,
        np.array([float(y0)]),
        0.0,
        t_end,
        "ode",
        exact=lambda t: np.array([y0 * math.exp((lam + zeta) * t)]),
    )


def two_by_two_system(lam: float, zeta: float, sigma: float) -> Problem:
    """``A = [[zeta, sigma], [sigma, lam]]`` with the second row fast."""
    if lam > 0 or zeta > 0:
        raise InvalidInputError("lam and zeta must be nonpositive")
    if sigma * sigma > lam * zeta:
        raise InvalidInputError("sigma**2 <= lam*zeta is required for a nonpositive spectrum")
    split = build_masked_splitting(two_by_two_matrix(lam, zeta, sigma), [False, True])
    sys = split.system()
    sys.rho_fast = lambda t, y: abs(lam)
    sys.rho_slow = lambda t, y: abs(zeta)
    sys.name = "two-by-two"
    return Problem("two-by-two", sys, np.array([1.0, 1.0]), 0.0, 1.0, "ode", split=split)


# ------------------------------------------------------------------ refined heat equation


@dataclass(frozen=True)
class RefinedHeat1D:
    coarse_spacing: float = 1.0 / 32
    refine_levels: int = 2
    fine_region: tuple = (0.25, 0.75)
    t_end: float = 0.5

    def __post_init__(self):
        a, b = self.fine_region
        n = 1.0 / self.coarse_spacing
        if abs(n - round(n)) > 1e-9 or n < 2:
            raise InvalidInputError("1/coarse_spacing must be an integer >= 2")
        if self.refine_levels < 0:
            raise InvalidInputError("refine_levels must be nonnegative")
        if not 0 < a < b < 1:
            raise InvalidInputError("fine region must lie strictly inside (0, 1)")
        for v in (a, b):
            if abs(v * n - round(v * n)) > 1e-9:
                raise InvalidInputError("fine region ends must be coarse grid nodes")


def refined_grid(cfg: RefinedHeat1D) -> np.ndarray:
    """All nodes on ``[0, 1]``, spacing ``H`` outside the fine region and ``H / 2**levels`` inside."""
    n = round(1.0 / cfg.coarse_spacing)
    a, b = (round(v * n) for v in cfg.fine_region)
    k = 2**cfg.refine_levels
    idx = list(range(0, a)) + [a + j / k for j in range((b - a) * k)] + list(range(b, n + 1))
    return np.array(idx, dtype=float) / n


def nonuniform_laplacian(x: np.ndarray) -> np.ndarray:
    """Three-point second-derivative matrix on the interior nodes of ``x`` (Dirichlet ends removed)."""
    hl = np.diff(x)[:-1]
    hr = np.diff(x)[1:]
    n = x.size - 2
    A = np.zeros((n, n))
    i = np.arange(n)
    scale = 2.0 / (hl + hr)
    A[i, i] = -scale * (1.0 / hl + 1.0 / hr)
    A[i[1:], i[1:] - 1] = scale[1:] / hl[1:]
    A[i[:-1], i[:-1] + 1] = scale[:-1] / hr[:-1]
    return A


def refined_heat_1d(cfg: RefinedHeat1D = RefinedHeat1D()) -> Problem:
    """Heat equation ``u_t = u_xx + g`` on a locally refined grid with masked splitting.

    The source is built from ``u(x, t) = sin(pi x) sin(pi t)**2`` so that the
    nodal values of ``u`` solve the semi-discrete system exactly; errors are
    then purely temporal.  The mask covers nodes of refined cells and their
    direct neighbours.  The source lives in the slow part.
    """
    x = refined_grid(cfg)
    xi = x[1:-1]
    A = nonuniform_laplacian(x)
    a, b = cfg.fine_region
    H = cfg.coarse_spacing
    mask = (xi >= a - H - 1e-12) & (xi <= b + H + 1e-12)
    split = build_masked_splitting(A, mask)
    af, as_ = split.A_fast, split.A_slow

    sx = np.sin(math.pi * xi)
    Asx = A @ sx

    def exact(t):
        return sx * math.sin(math.pi * t) ** 2

    def source(t):
        # u_t - A u at the nodes
        return sx * math.pi * math.sin(2 * math.pi * t) - Asx * math.sin(math.pi * t) ** 2

    rho_f = dense_spectral_radius(af)
    rho_s = dense_spectral_radius(as_)
    rho = dense_spectral_radius(A)
    sys = SplitSystem(
        fast=lambda t, y: af @ y,
        slow=lambda t, y: as_ @ y + source(t),
        dim=xi.size,
        rho_fast=lambda t, y: rho_f,
        rho_slow=lambda t, y: rho_s,
        rho_full=lambda t, y: rho,
        name="heat",
    )
    h = np.diff(x)
    weights = 0.5 * (h[:-1] + h[1:])

    def l2(e):
        return float(np.sqrt(np.sum(weights * np.asarray(e) ** 2)))

    return Problem(
        "heat", sys, np.zeros(xi.size), 0.0, cfg.t_end, "pde", norm=l2, exact=exact, split=split,
        extras=dict(x=xi, source=source, rho_fast=rho_f, rho_slow=rho_s, rho=rho, config=cfg),
    )


# ------------------------------------------------------------------ integro-differential problem


@dataclass(frozen=True)
class IntegroDiffConfig:
    n_cells: int = 100
    sigma: float = 0.01
    t_end: float = 1.0

    def __post_init__(self):
        if self.n_cells < 4:
            raise InvalidInputError("n_cells must be >= 4")


def intdiff_boundary(t) -> float:
    return 1.0 - math.sqrt(max(t, 0.0)) / 2.0


def trapezoid_weights(n_cells: int) -> np.ndarray:
    w = np.full(n_cells + 1, 1.0 / n_cells)
    w[0] = w[-1] = 0.5 / n_cells
    return w


def integro_differential_system(cfg: IntegroDiffConfig = IntegroDiffConfig()) -> Problem:
    """Nonlinear heat equation with a nonlocal absorption term.

    Unknowns are the values at ``x_i = i / N`` for ``i = 1..N``; node 0
    carries the Dirichlet value ``1 - sqrt(t) / 2`` and the Neumann end uses a
    mirrored ghost node.  The Laplacian is fast, the quadrature term slow.
    """
    N = cfg.n_cells
    h = 1.0 / N
    x = np.arange(N + 1) * h
    kernel = 1.0 / (1.0 + np.abs(x[:, None] - x[None, :])) ** 2
    wk = kernel[1:, :] * trapezoid_weights(N)[None, :]  # rows: unknowns, cols: all nodes
    sigma = cfg.sigma

    L = np.zeros((N, N))
    i = np.arange(N)
    L[i, i] = -2.0
    L[i[1:], i[1:] - 1] = 1.0
    L[i[:-1], i[:-1] + 1] = 1.0
    L[N - 1, N - 2] = 2.0  # ghost node u_{N+1} = u_{N-1}
    L /= h * h
    inv_h2 = 1.0 / (h * h)

    def fast(t, y):
        out = L @ y
        out[0] += inv_h2 * intdiff_boundary(t)
        return out

    def slow(t, y):
        u = np.concatenate(([intdiff_boundary(t)], y))
        return -sigma * (wk @ u**4)

    rho_f = dense_spectral_radius(L)
    row_max = float(np.max(wk.sum(axis=1)))

    def rho_slow(t, y):
        umax = max(float(np.max(np.abs(y))), intdiff_boundary(t))
        return 4.0 * abs(sigma) * row_max * umax**3

    sys = SplitSystem(
        fast=fast,
        slow=slow,
        dim=N,
        rho_fast=lambda t, y: rho_f,
        rho_slow=rho_slow,
        rho_full=lambda t, y: rho_f + rho_slow(t, y),
        name="intdiff",
    )
    weights = np.full(N, h)
    weights[-1] = 0.5 * h

    def l2(e):
        return float(np.sqrt(np.sum(weights * np.asarray(e) ** 2)))

    y0 = np.cos(x[1:] * math.pi / 2) ** 2
    return Problem(
        "intdiff", sys, y0, 0.0, cfg.t_end, "pde", norm=l2,
        extras=dict(x=x, kernel_weights=wk, laplacian=L, rho_fast=rho_f, config=cfg),
    )


PROBLEMS = {
    "robertson": robertson_system,
    "heat": refined_heat_1d,
    "intdiff": integro_differential_system,
    "multirate-test": lambda: multirate_test_system(-1e4, -1.0),
}


def get_problem(name: str) -> Problem:
    try:
        return PROBLEMS[name]()
    except KeyError:
        raise InvalidInputError(f"unknown problem {name!r}; choose from {sorted(PROBLEMS)}") from None
