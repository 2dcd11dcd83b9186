"""Radial sigma_k-Yamabe ODE on the cylinder, its first integral and global solutions.

With ``sigma_k`` normalised to ``2^{-k} binom(n, k)`` the radial equation reads

    xi_tt = (n/2k) e^{-2k xi} (1 - xi_t^2)^{1-k} - ((n-2k)/2k) (1 - xi_t^2)

and ``h = e^{(2k-n) xi} (1 - xi_t^2)^k - e^{-n xi}`` is conserved.

Orbits are integrated in the rapidity variable ``z = artanh(xi_t)``.  Then
``1 - xi_t^2 = sech^2 z`` is never formed by cancellation, and the flow
becomes

    xi' = tanh z,    z' = (n S - (n - 2k)) / 2k,    S = e^{-2k xi} cosh^{2k} z,

which stays well conditioned as ``xi_t -> 1`` (``h = 0`` and ``2k > n`` orbits).
On the level set of ``h`` one has ``S = 1 / (1 + h e^{n xi})``; substituting
this makes the level set an exact invariant curve of the integrated flow, so
the ``h = 0`` separatrix (``z = t``) is reproduced without the exponential
error growth of the full phase-plane flow.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import bisect, brentq

from .core import Params, RadialState, Regime
from .errors import DegenerateSlope, InadmissibleInput, PeriodNotFound
from .integrate import (
    DenseSolution,
    Tolerances,
    integrate_both_ways,
    locate_roots,
    logcosh,
    solve,
)

__all__ = [
    "SLOPE_GUARD",
    "SolutionKind",
    "SolutionClass",
    "K1Constants",
    "Orbit",
    "IntegStats",
    "rhs",
    "flow",
    "local_terms",
    "first_integral",
    "stationary_g",
    "stationary_g_prime",
    "hstar",
    "y_star",
    "xi_minus",
    "xi_plus",
    "canonical_minimum",
    "classify",
    "build_orbit",
    "integrate_state",
    "detect_period",
    "k1_constants",
    "cylrad_rhs",
    "cylrad_first_integral",
    "correction_exponent",
    "orbit_table",
    "orbit_metadata",
]

SLOPE_GUARD = 1e-13
# relative window in which h is identified with h*
_HSTAR_RTOL = 1e-12


# ---------------------------------------------------------------- pointwise

def rhs(p: Params, s: RadialState, guard: float = SLOPE_GUARD) -> float:
    """xi_tt from the radial equation at the phase point ``s``."""
    n, k = p.n, p.k
    q = 1.0 - s.xi_dot**2
    if k >= 2 and q <= -guard:
        raise InadmissibleInput(f"need |xi_t| < 1 for k >= 2, got xi_t={s.xi_dot}")
    if k >= 2 and abs(q) < guard:
        raise DegenerateSlope(f"1 - xi_t^2 = {q:.3e} below guard {guard:.1e}")
    return (n / (2 * k)) * math.exp(-2 * k * s.xi) * q ** (1 - k) - ((n - 2 * k) / (2 * k)) * q


def first_integral(p: Params, s: RadialState) -> float:
    n, k = p.n, p.k
    return math.exp((2 * k - n) * s.xi) * (1.0 - s.xi_dot**2) ** k - math.exp(-n * s.xi)


def _first_integral_rapidity(n, k, xi, z):
    return np.exp((2 * k - n) * xi - 2 * k * logcosh(z)) - np.exp(-n * xi)


def _s_on_level(n, h, xi):
    """``S = e^{-2k xi}(1 - xi_t^2)^{-k}`` on the level set, ``1/(1 + h e^{n xi})``."""
    if h == 0.0:
        return np.ones_like(np.asarray(xi, float))
    return 0.5 * (1.0 - np.tanh(0.5 * (math.log(h) + n * np.asarray(xi, float))))


def local_terms(n, k, h, xi, z):
    """Slope, ``1 - slope^2``, ``S`` and ``z'`` on the level set of ``h``."""
    slope = np.tanh(z)
    q = np.exp(-2.0 * logcosh(z))
    S = _s_on_level(n, h, xi)
    zt = (n * S - (n - 2 * k)) / (2 * k)
    return slope, q, S, zt


def flow(t, y, n, k, h):
    slope, _, _, zt = local_terms(n, k, h, y[0], y[1])
    return [slope, zt]


def stationary_g(p: Params, y):
    """``g(y) = e^{(2k-n) y} - e^{-n y}``, the first integral at ``xi_t = 0``."""
    return np.exp((2 * p.k - p.n) * np.asarray(y, float)) - np.exp(-p.n * np.asarray(y, float))


def stationary_g_prime(p: Params, y):
    y = np.asarray(y, float)
    return (2 * p.k - p.n) * np.exp((2 * p.k - p.n) * y) + p.n * np.exp(-p.n * y)


def _require_subcritical(p: Params):
    if p.regime is not Regime.SUBCRITICAL:
        raise InadmissibleInput(
            f"h* and y* exist only for 2k < n (got n={p.n}, k={p.k}: {p.regime.value})"
        )


def hstar(p: Params) -> float:
    _require_subcritical(p)
    n, k = p.n, p.k
    return (2 * k / (n - 2 * k)) * ((n - 2 * k) / n) ** (n / (2 * k))


def y_star(p: Params) -> float:
    _require_subcritical(p)
    return math.log(p.n / (p.n - 2 * p.k)) / (2 * p.k)


def xi_minus(p: Params, h: float) -> float:
    """Smaller root of ``g(y) = h`` on ``[0, y*]`` (``y*`` itself at ``h = h*``)."""
    _require_subcritical(p)
    hs, ys = hstar(p), y_star(p)
    if h < 0 or h > hs * (1 + _HSTAR_RTOL):
        raise InadmissibleInput(f"need 0 <= h <= h* = {hs:.15g}, got h={h}")
    if h == 0.0:
        return 0.0
    if h >= hs * (1 - _HSTAR_RTOL):
        return ys
    y = bisect(lambda v: float(stationary_g(p, v)) - h, 0.0, ys, xtol=1e-13)
    for _ in range(2):
        step = (float(stationary_g(p, y)) - h) / float(stationary_g_prime(p, y))
        cand = y - step
        if 0.0 <= cand <= ys and abs(float(stationary_g(p, cand)) - h) <= abs(float(stationary_g(p, y)) - h):
            y = cand
    return y


def xi_plus(p: Params, h: float) -> float:
    """Larger root of ``g(y) = h`` (maximum of the periodic orbit)."""
    _require_subcritical(p)
    hs, ys = hstar(p), y_star(p)
    if h <= 0 or h > hs * (1 + _HSTAR_RTOL):
        raise InadmissibleInput(f"need 0 < h <= h* = {hs:.15g}, got h={h}")
    if h >= hs * (1 - _HSTAR_RTOL):
        return ys
    hi = 2 * ys + 1.0
    while float(stationary_g(p, hi)) > h:
        hi *= 2
    return brentq(lambda v: float(stationary_g(p, v)) - h, ys, hi, xtol=1e-14, rtol=1e-15)


def canonical_minimum(p: Params, h: float) -> float:
    """``xi_h(0)``: the smallest root of the stationarity equation ``g(y) = h``."""
    if p.regime is Regime.SUBCRITICAL:
        return xi_minus(p, h)
    if h < 0:
        raise InadmissibleInput(f"need h >= 0, got h={h}")
    if p.regime is Regime.CRITICAL:
        if h >= 1.0:
            raise InadmissibleInput(f"2k = n requires h < 1, got h={h}")
        return -math.log1p(-h) / p.n
    if h == 0.0:
        return 0.0
    hi = math.log1p(h) / (2 * p.k - p.n) + 1.0
    return brentq(lambda v: float(stationary_g(p, v)) - h, 0.0, hi, xtol=1e-15, rtol=1e-15)


# ----------------------------------------------------------- classification

class SolutionKind(str, enum.Enum):
    SPHERICAL = "Spherical"
    PERIODIC = "Periodic"
    CYLINDER_CONSTANT = "CylinderConstant"
    CONE_LIKE = "ConeLike"
    FINITE_LIMIT = "FiniteLimit"


@dataclass(frozen=True)
class SolutionClass:
    """Kind of global radial solution plus its predicted asymptotic exponent.

    ``exponent`` is ``sqrt(1 - h^{1/k})`` (limiting slope) for ConeLike and
    ``2 - n/k`` (Hoelder exponent of the extended metric) for FiniteLimit.
    """

    kind: SolutionKind
    exponent: float | None = None


def classify(p: Params, h: float) -> SolutionClass:
    if not np.isfinite(h) or h < 0:
        raise InadmissibleInput(f"first integral must be a finite nonnegative number, got h={h}")
    if h == 0.0:
        return SolutionClass(SolutionKind.SPHERICAL)
    if p.regime is Regime.SUBCRITICAL:
        hs = hstar(p)
        if h > hs * (1 + _HSTAR_RTOL):
            raise InadmissibleInput(
                f"2k < n requires h <= h* = {hs:.15g} (n={p.n}, k={p.k}), got h={h}"
            )
        if h >= hs * (1 - _HSTAR_RTOL):
            return SolutionClass(SolutionKind.CYLINDER_CONSTANT)
        return SolutionClass(SolutionKind.PERIODIC)
    if p.regime is Regime.CRITICAL:
        if h >= 1.0:
            raise InadmissibleInput(f"2k = n requires h < 1, got h={h}")
        return SolutionClass(SolutionKind.CONE_LIKE, math.sqrt(1.0 - h ** (1.0 / p.k)))
    return SolutionClass(SolutionKind.FINITE_LIMIT, 2.0 - p.n / p.k)


# ------------------------------------------------------------------- orbits

@dataclass(frozen=True)
class IntegStats:
    steps: int
    nfev: int
    max_drift: float


@dataclass(frozen=True, eq=False)
class Orbit:
    """A densely sampled global radial solution ``xi_h``.

    ``t``, ``xi``, ``xi_dot`` are the accepted integrator nodes; ``dense``
    interpolates the state ``(xi, z)`` between them.
    """

    params: Params
    h: float
    solution_class: SolutionClass
    t: np.ndarray
    xi: np.ndarray
    xi_dot: np.ndarray
    stats: IntegStats
    dense: DenseSolution = field(repr=False)
    period: float | None = None

    @property
    def span(self) -> tuple[float, float]:
        return self.dense.t_min, self.dense.t_max

    @property
    def samples(self) -> np.ndarray:
        return np.column_stack([self.t, self.xi, self.xi_dot])

    def raw(self, t):
        """``(xi, z)`` at ``t``."""
        return self.dense(t)

    def state(self, t):
        xi, z = self.dense(t)
        return xi, np.tanh(z)

    def derivatives(self, t):
        """Return ``xi, xi_t, xi_tt, xi_ttt, q, S`` at ``t``.

        ``q = 1 - xi_t^2`` and ``S = e^{-2k xi} q^{-k}``.
        """
        n, k = self.params.n, self.params.k
        xi, z = self.dense(t)
        slope, q, S, zt = local_terms(n, k, self.h, xi, z)
        xi_tt = q * zt
        ztt = -(n * n / (2 * k)) * S * (1.0 - S) * slope
        xi_ttt = -2.0 * slope * q * zt * zt + q * ztt
        return xi, slope, xi_tt, xi_ttt, q, S

    def with_period(self, period: float) -> "Orbit":
        return Orbit(self.params, self.h, self.solution_class, self.t, self.xi,
                     self.xi_dot, self.stats, self.dense, period)


def _half_period(p: Params, h: float, y0, tol: Tolerances) -> float:
    def at_max(t, y, n, k, h):
        return y[1]

    at_max.terminal = True
    at_max.direction = -1
    horizon = 1e4
    sol = solve(flow, y0, (0.0, horizon), tol, events=at_max, args=(p.n, p.k, h))
    if sol.t_events[0].size == 0:
        raise PeriodNotFound("no maximum of xi before t = 1e4")
    return float(sol.t_events[0][0])


def _make_orbit(p: Params, h: float, cls: SolutionClass, y0, t_span, tol: Tolerances) -> Orbit:
    dense, info = integrate_both_ways(flow, y0, t_span, tol, args=(p.n, p.k, h))
    xi_n, z_n = dense.y_nodes
    drift = np.abs(_first_integral_rapidity(p.n, p.k, xi_n, z_n) - h)
    stats = IntegStats(info["steps"], info["nfev"], float(np.max(drift)))
    return Orbit(p, h, cls, dense.t_nodes, xi_n, np.tanh(z_n), stats, dense)


def build_orbit(
    p: Params,
    h: float,
    t_span: tuple[float, float] = (0.0, 20.0),
    tol: Tolerances = Tolerances(),
) -> Orbit:
    """Canonical global solution ``xi_h`` with ``xi_t(0) = 0`` at its minimum.

    Periodic orbits are integrated over at least two full periods forward of
    ``t = 0`` (the requested span is extended when shorter) and carry the
    detected period.
    """
    cls = classify(p, h)
    t_lo, t_hi = map(float, t_span)
    if not t_lo <= 0.0 <= t_hi or t_lo == t_hi:
        raise InadmissibleInput(f"t_span must contain 0 and be nondegenerate, got {t_span}")
    y0 = [canonical_minimum(p, h), 0.0]
    if cls.kind is SolutionKind.PERIODIC:
        t_hi = max(t_hi, 2.2 * 2.0 * _half_period(p, h, y0, tol))
    orbit = _make_orbit(p, h, cls, y0, (t_lo, t_hi), tol)
    if cls.kind is SolutionKind.PERIODIC:
        orbit = orbit.with_period(detect_period(orbit))
    return orbit


def integrate_state(
    p: Params,
    s: RadialState,
    t_span: tuple[float, float],
    tol: Tolerances = Tolerances(),
) -> Orbit:
    """Integrate from an arbitrary phase point placed at ``t = 0``.

    The period is filled in when the orbit is periodic and the span contains
    two minima.
    """
    if not abs(s.xi_dot) < 1.0:
        raise InadmissibleInput("need |xi_t| < 1")
    h = first_integral(p, s)
    if -1e-14 < h < 0.0:
        h = 0.0  # rounding of the h = 0 level set
    cls = classify(p, h)
    orbit = _make_orbit(p, h, cls, [s.xi, math.atanh(s.xi_dot)], t_span, tol)
    if cls.kind is SolutionKind.PERIODIC:
        try:
            orbit = orbit.with_period(detect_period(orbit))
        except PeriodNotFound:
            pass
    return orbit


def detect_period(o: Orbit) -> float:
    """Distance between consecutive minima of ``xi`` (upward zeros of ``xi_t``)."""
    if o.solution_class.kind is not SolutionKind.PERIODIC:
        raise InadmissibleInput(f"period requested for a {o.solution_class.kind.value} orbit")

    def z_of(t):
        return o.dense(t)[1]

    minima = locate_roots(z_of, o.t, direction=+1, xtol=1e-14)
    if minima.size < 2:
        raise PeriodNotFound(
            f"found {minima.size} minimum in span [{o.span[0]:.6g}, {o.span[1]:.6g}]"
        )
    i = int(np.argmin(np.abs(minima)))
    i = min(i, minima.size - 2)
    return float(minima[i + 1] - minima[i])


# ------------------------------------------------------ k = 1 (scalar curvature)

@dataclass(frozen=True)
class K1Constants:
    """Scalar-curvature constants in the ``psi = e^{-(n-2) xi / 2}`` picture."""

    n: int
    eps0: float
    Dstar: float


def k1_constants(n: int) -> K1Constants:
    if n < 3:
        raise InadmissibleInput(f"need n >= 3, got {n}")
    eps0 = ((n - 2) / n) ** ((n - 2) / 4)
    dstar = -((n - 2) / 2) * ((n - 2) / n) ** (n / 2)
    return K1Constants(n, eps0, dstar)


def cylrad_rhs(n: int, psi, psi_t=None):
    """``psi_tt`` for the scalar-curvature cylinder equation (no ``psi_t`` term)."""
    psi = np.asarray(psi, float)
    return (n - 2) ** 2 / 4 * psi - n * (n - 2) / 4 * psi ** ((n + 2) / (n - 2))


def cylrad_first_integral(n: int, psi, psi_t):
    psi = np.asarray(psi, float)
    return np.asarray(psi_t, float) ** 2 + (n - 2) ** 2 / 4 * (psi ** (2 * n / (n - 2)) - psi**2)


# -------------------------------------------------------------- asymptotics

def correction_exponent(o: Orbit, window: tuple[float, float] = (10.0, 30.0)) -> tuple[float, float]:
    """Fit ``xi(t) - t -> L`` with correction ``~ e^{-alpha t}`` for 2k > n.

    Regresses ``log(1 - xi_t)`` on ``t`` over ``window``; returns
    ``(alpha, L)``.
    """
    t = np.linspace(window[0], window[1], 401)
    xi, z = o.dense(t)
    log_gap = np.log(2.0) - np.logaddexp(0.0, 2.0 * z)  # log(1 - tanh z)
    slope, _ = np.polyfit(t, log_gap, 1)
    alpha = -slope
    limit = xi[-1] - t[-1] + np.exp(log_gap[-1]) / alpha
    return float(alpha), float(limit)


# ----------------------------------------------------------- serialization

def orbit_table(o: Orbit) -> np.ndarray:
    """Columns ``t, xi, xi_dot, h_residual`` at the accepted nodes."""
    xi, z = o.dense.y_nodes
    resid = _first_integral_rapidity(o.params.n, o.params.k, xi, z) - o.h
    return np.column_stack([o.t, o.xi, o.xi_dot, resid])


def orbit_metadata(o: Orbit) -> dict:
    return {
        "n": o.params.n,
        "k": o.params.k,
        "h": o.h,
        "class": o.solution_class.kind.value,
        "exponent": o.solution_class.exponent,
        "T": o.period,
        "max_drift": o.stats.max_drift,
    }
