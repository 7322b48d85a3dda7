"""RKC and multirate RKC time steppers.

The multirate scheme advances ``y' = f_F(y) + f_S(y)`` with an ``s``-stage
RKC recurrence whose force is the *averaged force*

    fbar(y) = (u_eta - y) / eta,

where ``u_eta`` is one ``m``-stage RKC step of length ``eta`` applied to the
auxiliary problem ``u' = f_F(u) + f_S(y)``, ``u(0) = y`` (slow force frozen).
Expensive ``f_S`` evaluations per step then scale with ``sqrt(rho_S)`` only.

Time handling: stage ``j`` of an outer step is evaluated at ``t + c_j tau``
(``c_j`` from the tableau), which is what appending ``t`` to the state with
a unit slow derivative would give.  Inside the auxiliary solve time stays
frozen at the outer stage time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .cheb import MAX_DEGREE
from .errors import BlowUpError, EstimationFailedError, InvalidInputError
from .spectral import PowerMethodConfig, estimate_spectral_radius
from .tableau import ChebTableau, build_tableau, damping_beta

STRICT = "strict"
RELAXED = "relaxed"
MODES = (STRICT, RELAXED)

DEFAULT_DAMPING = 0.05
RELAXED_INNER_DAMPING = 0.1


def _zero_rhs(t, y):
    return np.zeros_like(y)


@dataclass(eq=False)
class SplitSystem:
    """Right-hand side ``f = fast + slow`` with evaluation counters.

    ``fast`` and ``slow`` are ``(t, y) -> array`` callables.  The optional
    ``rho_fast``, ``rho_slow`` and ``rho_full`` callables return spectral
    radii analytically; when absent the power method is used.  Counters only
    move through ``eval_fast`` / ``eval_slow`` / ``eval_full``.
    """

    fast: Callable
    slow: Callable
    dim: int
    rho_fast: Callable | None = None
    rho_slow: Callable | None = None
    rho_full: Callable | None = None
    name: str = ""
    n_fast: int = 0
    n_slow: int = 0

    @classmethod
    def from_rhs(cls, rhs, dim, rho=None, name=""):
        """Wrap a monolithic ``rhs`` as a system with a zero fast part."""
        return cls(fast=_zero_rhs, slow=rhs, dim=dim, rho_full=rho, name=name)

    def eval_fast(self, t, y):
        self.n_fast += 1
        return self.fast(t, y)

    def eval_slow(self, t, y):
        self.n_slow += 1
        return self.slow(t, y)

    def eval_full(self, t, y):
        return self.eval_fast(t, y) + self.eval_slow(t, y)

    def full(self, t, y):
        """Uncounted ``f_F + f_S`` (for estimators and references)."""
        return self.fast(t, y) + self.slow(t, y)

    @property
    def counters(self) -> tuple[int, int]:
        return self.n_fast, self.n_slow

    def reset_counters(self):
        self.n_fast = 0
        self.n_slow = 0


@dataclass(frozen=True)
class SpectralEstimates:
    rho_fast: float
    rho_slow: float
    rho_full: float = float("nan")

    def __post_init__(self):
        for name in ("rho_fast", "rho_slow", "rho_full"):
            v = getattr(self, name)
            if name == "rho_full" and math.isnan(v):
                continue
            if not (math.isfinite(v) and v >= 0):
                raise InvalidInputError(f"{name} must be finite and >= 0, got {v!r}")


@dataclass(frozen=True)
class MrkcParameters:
    s: int
    m: int
    eta: float
    tau: float
    mode: str
    outer_damping: float
    inner_damping: float

    @property
    def degenerate(self) -> bool:
        """True when the averaged force collapses to ``f`` itself."""
        return self.m == 1 and self.eta == 0.0


def _smallest_int(pred, guess: int) -> int:
    """Smallest positive integer satisfying the monotone predicate ``pred``."""
    n = max(1, guess)
    while n > 1 and pred(n - 1):
        n -= 1
    while not pred(n):
        n += 1
    return n


def rkc_stages_for(tau_rho: float, damping: float = DEFAULT_DAMPING) -> int:
    """Smallest ``s`` with ``tau_rho <= beta * s**2``."""
    beta = damping_beta(damping)
    guess = math.ceil(math.sqrt(max(tau_rho, 0.0) / beta))
    return _smallest_int(lambda s: tau_rho <= beta * s * s, guess)


def select_mrkc_parameters(
    tau: float,
    est: SpectralEstimates,
    mode: str = STRICT,
    outer_damping: float = DEFAULT_DAMPING,
    inner_damping: float | None = None,
) -> MrkcParameters:
    """Choose ``(s, m, eta)`` for one multirate step.

    ``strict``: ``s`` from ``tau rho_S <= beta s^2``, then the smallest ``m``
    with ``6 tau rho_F <= beta^2 s^2 (m^2 - 1)`` and
    ``eta = 6 tau m^2 / (beta s^2 (m^2 - 1))``.  With ``rho_F = 0`` this gives
    ``m = 1`` and ``eta = 0`` (averaged force equals ``f``).

    ``relaxed``: ``eta = 2 tau / (beta s^2)`` and the smallest ``m`` with
    ``eta rho_F <= betabar m^2``, where ``betabar`` uses the inner damping
    (0.1 by default).
    """
    if mode not in MODES:
        raise InvalidInputError(f"mode must be one of {MODES}, got {mode!r}")
    if not tau > 0:
        raise InvalidInputError("tau must be positive")
    if inner_damping is None:
        inner_damping = outer_damping if mode == STRICT else RELAXED_INNER_DAMPING

    beta = damping_beta(outer_damping)
    s = rkc_stages_for(tau * est.rho_slow, outer_damping)
    bs2 = beta * s * s
    rho_f = est.rho_fast

    if mode == STRICT:
        lhs = 6.0 * tau * rho_f
        guess = math.ceil(math.sqrt(lhs / (beta * bs2) + 1.0))
        m = _smallest_int(lambda m: lhs <= beta * bs2 * (m * m - 1), guess)
        if m <= 1:
            return MrkcParameters(s, 1, 0.0, tau, mode, outer_damping, inner_damping)
        eta = 6.0 * tau / bs2 * (m * m) / (m * m - 1)
    else:
        eta = 2.0 * tau / bs2
        betabar = damping_beta(inner_damping)
        guess = math.ceil(math.sqrt(eta * rho_f / betabar))
        m = _smallest_int(lambda m: eta * rho_f <= betabar * m * m, guess)
    return MrkcParameters(s, m, eta, tau, mode, outer_damping, inner_damping)


def _check_stage_count(n, what):
    # a runaway spectral radius means the solution is already diverging
    if n > MAX_DEGREE:
        raise BlowUpError(f"{what} stage count {n} exceeds {MAX_DEGREE}")


def _check_stage(k, stage):
    if not np.all(np.isfinite(k)):
        raise BlowUpError(f"non-finite value at stage {stage}", stage=stage)


def rkc_step(rhs, t, y, tau, tableau: ChebTableau):
    """One step of the ``tableau.stages``-stage RKC method for ``y' = rhs(t, y)``."""
    mu, nu, kappa, c = tableau.mu, tableau.nu, tableau.kappa, tableau.c
    k_prev = y
    k = y + (mu[1] * tau) * rhs(t, y)
    _check_stage(k, 1)
    for j in range(2, tableau.stages + 1):
        k_new = nu[j] * k + kappa[j] * k_prev + (mu[j] * tau) * rhs(t + c[j - 1] * tau, k)
        _check_stage(k_new, j)
        k_prev, k = k, k_new
    return k


def averaged_force(sys: SplitSystem, t, y, params: MrkcParameters, inner_tableau: ChebTableau | None = None):
    """Discrete averaged force ``(u_eta - y) / eta``.

    Costs ``params.m`` fast evaluations and one slow evaluation.  ``y`` may
    also be a matrix whose columns are states, as long as ``fast`` and
    ``slow`` act column-wise.
    """
    if params.degenerate:
        return sys.eval_fast(t, y) + sys.eval_slow(t, y)
    if inner_tableau is None:
        inner_tableau = build_tableau(params.m, params.inner_damping)
    if inner_tableau.stages != params.m:
        raise InvalidInputError("inner tableau does not match params.m")
    eta = params.eta
    alpha, beta, gamma = inner_tableau.mu, inner_tableau.nu, inner_tableau.kappa

    slow = sys.eval_slow(t, y)
    u_prev = y
    u = y + (alpha[1] * eta) * (sys.eval_fast(t, y) + slow)
    _check_stage(u, 1)
    for j in range(2, params.m + 1):
        u_new = beta[j] * u + gamma[j] * u_prev + (alpha[j] * eta) * (sys.eval_fast(t, u) + slow)
        _check_stage(u_new, j)
        u_prev, u = u, u_new
    return (u - y) / eta


def mrkc_step(
    sys: SplitSystem,
    t,
    y,
    params: MrkcParameters,
    outer_tableau: ChebTableau | None = None,
    inner_tableau: ChebTableau | None = None,
):
    """One step of the ``(s, m)``-stage multirate RKC method."""
    if outer_tableau is None:
        outer_tableau = build_tableau(params.s, params.outer_damping)
    if outer_tableau.stages != params.s:
        raise InvalidInputError("outer tableau does not match params.s")
    if inner_tableau is None and not params.degenerate:
        inner_tableau = build_tableau(params.m, params.inner_damping)

    def fbar(ts, ys):
        return averaged_force(sys, ts, ys, params, inner_tableau)

    return rkc_step(fbar, t, y, params.tau, outer_tableau)


# ---------------------------------------------------------------- integration


RhoPolicy = Callable[[SplitSystem, float, np.ndarray, str], SpectralEstimates]


def power_method_policy(cfg: PowerMethodConfig = PowerMethodConfig()) -> RhoPolicy:
    """Spectral radii from analytic callbacks when the system has them, else the power method."""

    def policy(sys: SplitSystem, t, y, method):
        def radius(callback, rhs):
            if callback is not None:
                return float(callback(t, y))
            return estimate_spectral_radius(rhs, t, y, cfg)

        if method == "rkc":
            rho = radius(sys.rho_full, sys.full)
            return SpectralEstimates(0.0, 0.0, rho)
        return SpectralEstimates(
            radius(sys.rho_fast, sys.fast),
            radius(sys.rho_slow, sys.slow),
        )

    return policy


@dataclass(frozen=True)
class StepRecord:
    t: float
    tau: float
    s: int
    m: int = 1
    eta: float = 0.0
    rho_fast: float = float("nan")
    rho_slow: float = float("nan")
    rho: float = float("nan")


@dataclass
class Solution:
    method: str
    t: np.ndarray
    y: np.ndarray  # final state
    records: list = field(default_factory=list)
    trajectory: np.ndarray | None = None  # row i is the state at t[i]
    n_fast: int = 0
    n_slow: int = 0

    @property
    def s(self) -> np.ndarray:
        return np.array([r.s for r in self.records])

    @property
    def m(self) -> np.ndarray:
        return np.array([r.m for r in self.records])

    @property
    def eta(self) -> np.ndarray:
        return np.array([r.eta for r in self.records])


def _estimate(rho_policy, system, t, y, method) -> SpectralEstimates:
    try:
        return rho_policy(system, t, y, method)
    except (EstimationFailedError, InvalidInputError) as err:
        raise BlowUpError(f"spectral radius estimation failed: {err}") from err


def _stage_counts(h, est, method, mode, damping, inner_damping):
    """RKC stage count, or mRKC parameters, for one step; both checked against the cap."""
    if method == "rkc":
        s = rkc_stages_for(h * est.rho_full, damping)
        _check_stage_count(s, "RKC")
        return s
    p = select_mrkc_parameters(h, est, mode, damping, inner_damping)
    _check_stage_count(p.s, "outer")
    _check_stage_count(p.m, "inner")
    return p


def integrate(
    system,
    y0,
    t0: float,
    t_end: float,
    tau: float,
    method: str = "mrkc",
    mode: str = STRICT,
    damping: float = DEFAULT_DAMPING,
    inner_damping: float | None = None,
    rho_policy: RhoPolicy | None = None,
    keep_trajectory: bool = True,
    dim: int | None = None,
) -> Solution:
    """Integrate with fixed step ``tau`` from ``t0`` to ``t_end``.

    ``system`` is a :class:`SplitSystem` or, for ``method="rkc"``, a plain
    ``rhs(t, y)`` callable.  Spectral radii are re-estimated at the start of
    every step.  The last step is shortened to land on ``t_end``.
    A :class:`BlowUpError` propagates with its ``t`` set to the failing step.
    """
    if method not in ("rkc", "mrkc"):
        raise InvalidInputError(f"unknown method {method!r}")
    if not t_end > t0:
        raise InvalidInputError("t_end must exceed t0")
    if not tau > 0:
        raise InvalidInputError("tau must be positive")
    y = np.array(y0, dtype=float)
    if not isinstance(system, SplitSystem):
        if method != "rkc":
            raise InvalidInputError("mrkc needs a SplitSystem")
        system = SplitSystem.from_rhs(system, dim or y.size)
    if rho_policy is None:
        rho_policy = power_method_policy()

    span = t_end - t0
    n_steps = max(1, math.ceil(span / tau - 1e-10))
    times = [t0]
    traj = [y.copy()] if keep_trajectory else None
    records = []
    f0, s0 = system.counters
    t = t0
    for n in range(n_steps):
        h = tau if n < n_steps - 1 else t_end - t
        try:
            est = _estimate(rho_policy, system, t, y, method)
            stages = _stage_counts(h, est, method, mode, damping, inner_damping)
            if method == "rkc":
                y = rkc_step(system.eval_full, t, y, h, build_tableau(stages, damping))
                records.append(StepRecord(t, h, stages, rho=est.rho_full))
            else:
                y = mrkc_step(system, t, y, stages)
                records.append(
                    StepRecord(t, h, stages.s, stages.m, stages.eta, est.rho_fast, est.rho_slow)
                )
        except BlowUpError as err:
            err.t = t
            raise
        t = t0 + (n + 1) * tau if n < n_steps - 1 else t_end
        times.append(t)
        if keep_trajectory:
            traj.append(y.copy())
    f1, s1 = system.counters
    return Solution(
        method=method,
        t=np.array(times),
        y=y,
        records=records,
        trajectory=np.array(traj) if keep_trajectory else None,
        n_fast=f1 - f0,
        n_slow=s1 - s0,
    )


def rk4_reference(rhs, y0, t0: float, t_end: float, tau: float):
    """Classical fourth-order Runge-Kutta with fixed step (last step shortened)."""
    y = np.array(y0, dtype=float)
    n_steps = max(1, math.ceil((t_end - t0) / tau - 1e-10))
    t = t0
    for n in range(n_steps):
        h = tau if n < n_steps - 1 else t_end - t
        k1 = rhs(t, y)
        k2 = rhs(t + 0.5 * h, y + (0.5 * h) * k1)
        k3 = rhs(t + 0.5 * h, y + (0.5 * h) * k2)
        k4 = rhs(t + h, y + h * k3)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        t = t0 + (n + 1) * tau if n < n_steps - 1 else t_end
    if not np.all(np.isfinite(y)):
        raise BlowUpError("RK4 reference produced non-finite values", t=t)
    return y
