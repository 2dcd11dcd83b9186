"""Matching a perturbed trajectory to a translated periodic reference.

Setting: ``beta'' = f(beta', beta) + e1(t)`` with ``H(beta', beta)`` an
approximate first integral, ``|H| <= e2(t)``.  The reference ``psi`` solves
the unperturbed equation from its minimum ``(m, 0)``.  Minima ``tau_j`` of
``beta`` are tracked; ``s_j = tau_j - j T`` converges to a phase ``s_inf`` and
``beta - psi(. - s_inf)`` is compared against the tail integral of the
perturbation.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .errors import InadmissibleInput, IntegrationFailure, MatchFailure
from .integrate import Tolerances, locate_roots, solve
from .linear import decay_rate

__all__ = [
    "Case",
    "MatchProblem",
    "Trajectory",
    "PeriodicReference",
    "Constants",
    "MatchResult",
    "EnvelopeCheck",
    "integrate_perturbed",
    "reference",
    "estimate_constants",
    "fitted_e2",
    "find_critical_points",
    "match_orbit",
    "tail_bound",
    "integrability",
    "verify_envelope",
]

DELTA_STOP = 1e-10
MAX_WINDOWS = 64
BOUND_FLOOR = 1e-8


class Case(str, enum.Enum):
    CONSTANT = "ConstantPsi"
    PERIODIC = "PeriodicPsi"


@dataclass(frozen=True, eq=False)
class MatchProblem:
    """Perturbed autonomous second-order equation with an approximate first integral.

    ``f(x, y)`` and ``H(x, y)`` take ``x = beta'`` and ``y = beta``.  With
    ``e2=None`` the slack is fitted along the trajectory (see
    :func:`fitted_e2`).  ``m`` is the minimum of the reference solution.
    """

    f: Callable
    H: Callable
    e1: Callable
    m: float
    l: float = 1.0
    A_nd: float = 1.0
    eps1: float = 0.1
    case: Case = Case.PERIODIC
    e2: Callable | None = None

    def __post_init__(self):
        if not (self.l > 0 and self.A_nd > 0 and self.eps1 > 0):
            raise InadmissibleInput("l, A_nd and eps1 must be positive")


# ------------------------------------------------------------ trajectories

@dataclass(frozen=True, eq=False)
class Trajectory:
    t: np.ndarray
    y: np.ndarray          # rows beta, beta'
    dense: Callable = field(repr=False)
    problem: MatchProblem = field(repr=False)

    @property
    def span(self):
        return float(self.t[0]), float(self.t[-1])

    def __call__(self, t):
        return self.dense(t)

    def H_along(self, t):
        b, db = self.dense(t)
        return self.problem.H(db, b)


def integrate_perturbed(
    prob: MatchProblem,
    init: tuple[float, float],
    span: tuple[float, float],
    tol: Tolerances = Tolerances(1e-12, 1e-14),
    bound: float | None = None,
) -> Trajectory:
    """Integrate ``beta'' = f(beta', beta) + e1(t)`` from ``(beta, beta')``.

    Stops with :class:`IntegrationFailure` when ``|beta| + |beta'|`` exceeds
    ``10 * bound`` (default bound ``|beta0| + |beta0'| + |m| + 1``).
    """
    y0 = np.asarray(init, float)
    if bound is None:
        bound = float(np.abs(y0).sum() + abs(prob.m) + 1.0)
    limit = 10.0 * bound

    def rhs(t, y):
        return [y[1], prob.f(y[1], y[0]) + prob.e1(t)]

    def blow_up(t, y):
        return limit - abs(y[0]) - abs(y[1])

    blow_up.terminal = True
    sol = solve(rhs, y0, span, tol, events=blow_up)
    if sol.status == 1:
        raise IntegrationFailure(f"trajectory left the a priori region at t={sol.t[-1]:.6g}")
    return Trajectory(sol.t, sol.y, sol.sol, prob)


# --------------------------------------------------------------- reference

@dataclass(frozen=True, eq=False)
class PeriodicReference:
    """Unperturbed solution through ``(m, 0)``, extended periodically."""

    m: float
    M: float
    T: float | None
    Lam: float
    dense: Callable | None = field(repr=False, default=None)

    def __call__(self, t):
        t = np.asarray(t, float)
        if self.T is None:
            return np.full_like(t, self.m), np.zeros_like(t)
        tau = np.mod(t, self.T)
        return self.dense(tau)


def reference(prob: MatchProblem, tol: Tolerances = Tolerances(1e-12, 1e-14), horizon: float = 1e3) -> PeriodicReference:
    if prob.case is Case.CONSTANT:
        return PeriodicReference(prob.m, prob.m, None, 0.0)

    def rhs(t, y):
        return [y[1], prob.f(y[1], y[0])]

    def at_max(t, y):
        return y[1]

    at_max.terminal = True
    at_max.direction = -1
    first = solve(rhs, [prob.m, 0.0], (0.0, horizon), tol, events=at_max)
    if first.t_events[0].size == 0:
        raise MatchFailure("reference solution has no maximum: not periodic")
    t_half = float(first.t_events[0][0])
    sol = solve(rhs, [prob.m, 0.0], (0.0, 3.0 * t_half), tol)
    nodes = sol.t[sol.t > 0.5 * t_half]
    minima = locate_roots(lambda s: sol.sol(s)[1], nodes, direction=+1, xtol=1e-14)
    if minima.size == 0:
        raise MatchFailure("reference solution does not return to its minimum")
    T = float(minima[0])
    grid = np.linspace(0.0, T, 2001)
    y, x = sol.sol(grid)
    acc = np.array([prob.f(xi, yi) for xi, yi in zip(x, y)])
    lam = float(max(np.max(np.abs(x)), np.max(np.abs(acc))))
    return PeriodicReference(prob.m, float(np.max(y)), T, lam, sol.sol)


# --------------------------------------------------------------- constants

@dataclass(frozen=True)
class Constants:
    a: float
    eps2: float
    Lam: float
    B: float
    T0: float


def _ball(m, r, num=41):
    """Samples of the diamond ``|x| + |y - m| <= r``."""
    u = np.linspace(-r, r, num)
    X, Y = np.meshgrid(u, u)
    keep = np.abs(X) + np.abs(Y) <= r
    return X[keep], m + Y[keep]


def estimate_constants(prob: MatchProblem, traj: Trajectory, ref: PeriodicReference) -> Constants:
    a = abs(prob.f(0.0, prob.m))
    eps2 = prob.eps1
    if prob.case is Case.PERIODIC:
        for _ in range(60):
            X, Y = _ball(prob.m, eps2)
            if np.min(np.abs(prob.f(X, Y))) >= 0.75 * a:
                break
            eps2 *= 0.5
        else:
            raise MatchFailure("no ball around (0, m) where |f| stays near a")
    t_grid = np.linspace(*traj.span, 20001)
    if prob.case is Case.PERIODIC:
        e1 = np.abs(prob.e1(t_grid)) * np.ones_like(t_grid)
        tail = np.maximum.accumulate(e1[::-1])[::-1]
        inside = np.nonzero(tail < 0.25 * a)[0]
        T0 = float(t_grid[inside[0]]) if inside.size else math.inf
    else:
        b, db = traj(t_grid)
        inside = np.nonzero(np.abs(db) + np.abs(b - prob.m) <= eps2)[0]
        T0 = float(t_grid[inside[0]]) if inside.size else math.inf
    B = _flow_sensitivity(prob, ref)
    return Constants(a, eps2, ref.Lam, B, T0)


def _flow_sensitivity(prob: MatchProblem, ref: PeriodicReference, d: float = 1e-6) -> float:
    """Largest finite-difference flow-map Jacobian norm over ``[0, 2T]``."""
    if ref.T is None:
        return 1.0
    tol = Tolerances(1e-11, 1e-13)

    def rhs(t, y):
        return [y[1], prob.f(y[1], y[0])]

    span = (0.0, 2.0 * ref.T)
    grid = np.linspace(*span, 401)
    base = solve(rhs, [prob.m, 0.0], span, tol).sol(grid)
    cols = []
    for e in ([d, 0.0], [0.0, d]):
        pert = solve(rhs, [prob.m + e[0], e[1]], span, tol).sol(grid)
        cols.append((pert - base) / d)
    J = np.stack(cols, axis=-1)  # (2, time, 2)
    return float(np.max(np.abs(J).sum(axis=0)))


def fitted_e2(traj: Trajectory, samples: int = 20001) -> Callable:
    """Running non-increasing envelope of ``|H|`` along the trajectory (zero past its end)."""
    t = np.linspace(*traj.span, samples)
    a = np.abs(traj.H_along(t))
    env = np.maximum.accumulate(a[::-1])[::-1]
    t_end = t[-1]

    def e2(s):
        s = np.asarray(s, float)
        out = np.interp(s, t, env)
        return np.where(s > t_end, 0.0, out)

    return e2


def _e2_of(prob: MatchProblem, traj: Trajectory) -> Callable:
    return prob.e2 if prob.e2 is not None else fitted_e2(traj)


# --------------------------------------------------------- critical points

@dataclass(frozen=True)
class CriticalPoints:
    tau: np.ndarray
    near_min: np.ndarray      # per-point check |beta - m| <= (e2/A)^{1/l}
    eps2: float
    T0: float


def find_critical_points(traj: Trajectory, prob: MatchProblem, consts: Constants) -> CriticalPoints:
    """Minima of ``beta`` (upward zeros of ``beta'``) inside the eps2 ball after ``T0``."""
    if prob.case is Case.CONSTANT:
        return CriticalPoints(np.array([]), np.array([], bool), consts.eps2, consts.T0)
    nodes = traj.t[traj.t >= consts.T0]
    if nodes.size < 2:
        return CriticalPoints(np.array([]), np.array([], bool), consts.eps2, consts.T0)
    roots = locate_roots(lambda s: traj(s)[1], nodes, direction=+1, xtol=1e-13)
    roots = roots[roots > consts.T0]
    if roots.size == 0:
        return CriticalPoints(roots, np.array([], bool), consts.eps2, consts.T0)
    b = traj(roots)[0]
    roots = roots[np.abs(b - prob.m) <= consts.eps2]
    e2 = _e2_of(prob, traj)
    b = traj(roots)[0]
    ok = np.abs(b - prob.m) <= (np.asarray(e2(roots)) / prob.A_nd) ** (1.0 / prob.l) + 1e-12
    return CriticalPoints(roots, ok, consts.eps2, consts.T0)


# ---------------------------------------------------------------- matching

@dataclass(frozen=True, eq=False)
class MatchResult:
    case: Case
    T: float | None
    m: float
    tau: np.ndarray
    delta: np.ndarray
    s: np.ndarray
    s_inf: float
    tail: float
    env_t: np.ndarray
    envelope: np.ndarray
    constants: Constants
    near_min: np.ndarray
    case1_ok: bool | None = None

    @property
    def num_windows(self) -> int:
        return int(self.tau.size)


def _cauchy(delta: np.ndarray) -> tuple[bool, float]:
    """Whether the increments shrink, and a geometric estimate of the remaining sum."""
    a = np.abs(delta)
    if a.size and a[-1] < DELTA_STOP:
        return True, float(a[-1])
    if a.size < 3:
        return False, math.inf
    third = max(1, a.size // 3)
    head, last = a[:third].sum(), a[-third:].sum()
    if not last < 0.5 * head:
        return False, math.inf
    r = float(np.median(a[1:] / np.maximum(a[:-1], 1e-300)))
    if r >= 1:
        return False, math.inf
    return True, float(a[-1] * r / (1 - r))


def match_orbit(traj: Trajectory, prob: MatchProblem, ref: PeriodicReference | None = None) -> MatchResult:
    """Phase ``s_inf`` and convergence envelope of ``traj`` against the reference."""
    ref = reference(prob) if ref is None else ref
    consts = estimate_constants(prob, traj, ref)
    t_lo, t_hi = traj.span
    if prob.case is Case.CONSTANT:
        if not math.isfinite(consts.T0):
            raise MatchFailure("trajectory never enters the eps2 ball around the constant")
        t = np.linspace(consts.T0, t_hi, 4001)
        b, db = traj(t)
        env = np.abs(b - prob.m) + np.abs(db)
        e2 = _e2_of(prob, traj)
        lhs = np.abs(db) ** prob.l + np.abs(b - prob.m) ** prob.l
        ok = bool(np.all(lhs <= np.asarray(e2(t)) / prob.A_nd + 1e-14))
        return MatchResult(prob.case, None, prob.m, np.array([]), np.array([]), np.array([]),
                           0.0, 0.0, t, env, consts, np.array([], bool), ok)

    cps = find_critical_points(traj, prob, consts)
    tau = cps.tau
    if tau.size < 4:
        raise MatchFailure(f"only {tau.size} critical points found after T0={consts.T0:.4g}")
    delta = np.diff(tau) - ref.T
    stop = np.nonzero(np.abs(delta) < DELTA_STOP)[0]
    J = min(int(stop[0]) + 1 if stop.size else tau.size - 1, MAX_WINDOWS)
    tau, delta = tau[: J + 1], delta[:J]
    s = tau - np.arange(tau.size) * ref.T
    ok, tail = _cauchy(delta)
    if not ok:
        raise MatchFailure("s_j is not Cauchy: increments do not shrink")
    s_inf = float(s[-1])
    t = np.linspace(tau[0], t_hi, 4001)
    b, db = traj(t)
    pb, pdb = ref(t - s_inf)
    env = np.abs(b - pb) + np.abs(db - pdb)
    return MatchResult(prob.case, ref.T, prob.m, tau, delta, s, s_inf, tail, t, env,
                       consts, cps.near_min[: tau.size])


# ------------------------------------------------------------- envelopes

def _tail_integrand(prob: MatchProblem, e2: Callable, s: np.ndarray) -> np.ndarray:
    e1 = np.abs(np.asarray(prob.e1(s), float) * np.ones_like(s))
    sup_tail = np.maximum.accumulate(e1[::-1])[::-1]
    return np.asarray(e2(s), float) ** (1.0 / prob.l) + sup_tail


def tail_bound(prob: MatchProblem, e2: Callable, t: np.ndarray, horizon: float, dt: float = 0.01) -> np.ndarray:
    """``int_{t-1}^{horizon} (e2^{1/l} + sup_{u>=s} |e1(u)|) ds`` at each ``t``.

    The sup over ``u`` is taken on the same grid (up to ``horizon``).
    """
    lo = min(float(np.min(t)) - 1.0, 0.0)
    s = np.arange(lo, horizon + dt, dt)
    g = _tail_integrand(prob, e2, s)
    cum = cumulative_trapezoid(g[::-1], dx=dt, initial=0.0)[::-1]
    return np.interp(np.asarray(t, float) - 1.0, s, cum)


def integrability(prob: MatchProblem, e2: Callable, t_end: float, levels: int = 6) -> tuple[bool, list[float]]:
    """Cauchy test of ``int_0^T (e2^{1/l} + sup-tail |e1|)`` over doubling horizons."""
    horizons = [t_end * 2.0 ** (j - 3) for j in range(levels)]
    dt = 0.01
    s = np.arange(0.0, horizons[-1] + dt, dt)
    g = _tail_integrand(prob, e2, s)
    cum = cumulative_trapezoid(g, dx=dt, initial=0.0)
    vals = [float(np.interp(hz, s, cum)) for hz in horizons]
    inc = np.abs(np.diff(vals))
    total = max(vals[-1], 1e-300)
    # increments below the noise floor count as converged
    shrinking = bool(np.all(inc[1:] <= 0.75 * inc[:-1] + BOUND_FLOOR))
    ok = shrinking and bool(inc[-1] <= 1e-3 * total + BOUND_FLOOR)
    return ok, vals


@dataclass(frozen=True)
class EnvelopeCheck:
    ok: bool
    C_fit: float
    integrable: bool
    ratio_growth: float
    rate: float | None
    bound: np.ndarray


def verify_envelope(r: MatchResult, prob: MatchProblem, traj: Trajectory, period_hint: float | None = None) -> EnvelopeCheck:
    """Check ``envelope(t) <= C * int_{t-1}^inf (e2^{1/l} + sup-tail|e1|)``.

    Samples where the bound is below ``1e-8`` (integration noise level) are
    skipped.  ``ok`` needs the integrability test to pass and the ratio not
    to grow over the run.  ``rate`` is the fitted exponential decay rate of
    the envelope.
    """
    e2 = _e2_of(prob, traj)
    t_end = traj.span[1]
    horizon = t_end + 60.0
    integrable, _ = integrability(prob, e2, t_end)
    bound = tail_bound(prob, e2, r.env_t, horizon)
    use = bound >= BOUND_FLOOR
    if not np.any(use):
        small = float(np.max(r.envelope)) <= 1e-7
        return EnvelopeCheck(bool(integrable and small), 0.0, bool(integrable), 1.0, None, bound)
    ratio = r.envelope[use] / bound[use]
    C_fit = float(np.max(ratio))
    n3 = max(1, ratio.size // 3)
    early = float(np.max(ratio[: ratio.size - n3])) if ratio.size > n3 else float(ratio[0])
    late = float(np.max(ratio[-n3:]))
    growth = late / early if early > 0 else math.inf
    ok = integrable and math.isfinite(C_fit) and growth <= 2.0
    rate = None
    sel = use & (r.envelope > 1e-9)
    if np.count_nonzero(sel) > 10:
        period = period_hint if period_hint is not None else r.T
        try:
            rate = decay_rate(r.env_t[sel], r.envelope[sel], period)
        except InadmissibleInput:
            rate = decay_rate(r.env_t[sel], r.envelope[sel], None)
    return EnvelopeCheck(bool(ok), C_fit, bool(integrable), growth, rate, bound)
