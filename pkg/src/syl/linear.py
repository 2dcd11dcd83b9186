"""Linearisation of the sigma_k-Yamabe operator at a radial solution.

Projecting onto a spherical harmonic with eigenvalue ``lam`` gives the mode
equation

    L[phi] = phi'' + (B/A) phi' + (-lam C/A + n S q) phi = 0,

``q = 1 - xi_t^2``, ``S = e^{-2k xi} q^{-k}``.  For a periodic ``xi`` this is
a Hill equation; its period map, Floquet exponents, explicit kernels, a
Liouville normal form and a variation-of-constants solver live here.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import cumulative_simpson

from .core import Params, Regime
from .errors import InadmissibleInput, PeriodNotFound
from .integrate import TIGHT, Tolerances, solve
from .radial import (
    Orbit,
    SolutionKind,
    build_orbit,
    canonical_minimum,
    flow,
    local_terms,
    stationary_g_prime,
    y_star,
)

__all__ = [
    "ModeLabel",
    "ModeSpec",
    "mode_for",
    "LinearCoeffs",
    "coeffs",
    "mode_residual",
    "zero_plus",
    "translational_minus",
    "translational_plus",
    "FundamentalPair",
    "translational_pair",
    "zero_mode_pair",
    "floquet_pair",
    "period_derivative",
    "wronskian_weight",
    "liouville",
    "discriminant",
    "c_bound",
    "max_e",
    "Monodromy",
    "monodromy",
    "monodromy_batch",
    "zero_mode_frequency",
    "vc_solve",
    "decay_rate",
    "spectrum_record",
    "e_trace",
]

JORDAN_TRACE_TOL = 1e-6
JORDAN_DET_TOL = 1e-8
RESONANCE_GAP = 1e-3


# --------------------------------------------------------------- modes

class ModeLabel(str, enum.Enum):
    ZERO = "Zero"
    TRANSLATIONAL = "Translational"
    HIGHER = "Higher"


@dataclass(frozen=True)
class ModeSpec:
    """Spherical-harmonic eigenvalue and its role."""

    lambda_j: float
    label: ModeLabel

    def check(self, p: Params) -> "ModeSpec":
        expected = _label_of(p, self.lambda_j)
        if expected is not self.label:
            raise InadmissibleInput(
                f"lambda={self.lambda_j} is a {expected.value} eigenvalue for n={p.n}, "
                f"not {self.label.value}"
            )
        return self


def _label_of(p: Params, lam: float) -> ModeLabel:
    if lam == 0.0:
        return ModeLabel.ZERO
    if lam == p.n - 1:
        return ModeLabel.TRANSLATIONAL
    if lam >= 2 * p.n:
        return ModeLabel.HIGHER
    raise InadmissibleInput(
        f"lambda={lam} is not a sphere eigenvalue in scope for n={p.n} (0, n-1, or >= 2n)"
    )


def mode_for(p: Params, lam: float) -> ModeSpec:
    return ModeSpec(float(lam), _label_of(p, float(lam)))


# -------------------------------------------------------- coefficients

def _terms(n, k, h, xi, z, lam):
    """``B/A`` and the zeroth-order coefficient of the mode equation."""
    slope, q, S, zt = local_terms(n, k, h, xi, z)
    b = -2.0 * slope * ((k - 1) * zt + 0.5 * (n - 2 * k))
    ca = (2.0 * (k - 1) * zt + n - 2 * k + 1) / (n - 1)
    c = -lam * ca + n * S * q
    return b, c


@dataclass(frozen=True, eq=False)
class LinearCoeffs:
    """Coefficient functions ``A, B, C`` of the linearised operator."""

    orbit: Orbit

    def _d(self, t):
        return self.orbit.derivatives(t)

    def A(self, t):
        return 0.5 * self._d(t)[4]

    def B(self, t):
        _, slope, xi_tt, _, q, _ = self._d(t)
        k, n = self.orbit.params.k, self.orbit.params.n
        return -slope * ((k - 1) * xi_tt + 0.5 * (n - 2 * k) * q)

    def C(self, t):
        _, _, xi_tt, _, q, _ = self._d(t)
        k, n = self.orbit.params.k, self.orbit.params.n
        return (k - 1) / (n - 1) * xi_tt + (n - 2 * k + 1) / (n - 1) * 0.5 * q

    def B_over_A(self, t):
        return self.B(t) / self.A(t)

    def C_over_A(self, t):
        return self.C(t) / self.A(t)

    def potential(self, t, lam: float):
        """Zeroth-order coefficient ``-lam C/A + n S q``."""
        _, _, _, _, q, S = self._d(t)
        n = self.orbit.params.n
        return -lam * self.C_over_A(t) + n * S * q


def coeffs(o: Orbit) -> LinearCoeffs:
    if o.solution_class.kind not in (
        SolutionKind.SPHERICAL, SolutionKind.PERIODIC, SolutionKind.CYLINDER_CONSTANT
    ):
        raise InadmissibleInput(f"linearisation needs a bounded-slope orbit, got {o.solution_class.kind.value}")
    return LinearCoeffs(o)


def mode_residual(o: Orbit, m: ModeSpec, phi: Callable) -> Callable:
    """``t -> L[phi](t)`` where ``phi(t)`` returns ``(phi, phi', phi'')``."""
    lc = coeffs(o)

    def residual(t):
        f0, f1, f2 = phi(t)
        return f2 + lc.B_over_A(t) * f1 + lc.potential(t, m.lambda_j) * f0

    return residual


# ------------------------------------------------------- explicit kernels

def zero_plus(o: Orbit) -> Callable:
    """``xi_t`` and its derivatives (translation along the orbit)."""

    def phi(t):
        _, slope, xi_tt, xi_ttt, _, _ = o.derivatives(t)
        return slope, xi_tt, xi_ttt

    return phi


def translational_minus(o: Orbit) -> Callable:
    """``e^{-t}(1 + xi_t)``."""

    def phi(t):
        _, p1, p2, p3, _, _ = o.derivatives(t)
        e = np.exp(-np.asarray(t, float))
        return e * (1 + p1), e * (-1 - p1 + p2), e * (1 + p1 - 2 * p2 + p3)

    return phi


def translational_plus(o: Orbit) -> Callable:
    """``e^{t}(1 - xi_t)``."""

    def phi(t):
        _, p1, p2, p3, _, _ = o.derivatives(t)
        e = np.exp(np.asarray(t, float))
        return e * (1 - p1), e * (1 - p1 - p2), e * (1 - p1 - 2 * p2 - p3)

    return phi


@dataclass(frozen=True, eq=False)
class FundamentalPair:
    """Two independent solutions of a mode equation.

    Each callable returns ``(phi, phi', phi'')``.  ``W`` is
    ``phi_plus phi_minus' - phi_minus phi_plus'``.
    """

    mode: ModeSpec
    phi_minus: Callable
    phi_plus: Callable

    def W(self, t):
        m0, m1, _ = self.phi_minus(t)
        p0, p1, _ = self.phi_plus(t)
        return p0 * m1 - m0 * p1


def translational_pair(o: Orbit) -> FundamentalPair:
    return FundamentalPair(mode_for(o.params, o.params.n - 1), translational_minus(o), translational_plus(o))


def wronskian_weight(o: Orbit, t):
    """``e^{-((n-2k)/k) xi} (e^{-n xi} + h)^{(k-1)/k}``; ``W * weight`` is constant."""
    n, k = o.params.n, o.params.k
    xi = o.derivatives(t)[0]
    return np.exp(-((n - 2 * k) / k) * xi) * (np.exp(-n * xi) + o.h) ** ((k - 1) / k)


# ---------------------------------------------------------- zero mode

def _variation_rhs(t, y, n, k, h):
    xi, z, dxi, dz = y
    slope, q, S, zt = local_terms(n, k, h, xi, z)
    w = S * (1.0 - S)
    return [slope, zt, q * dz, -(n / (2 * k)) * w * (n * dxi + 1.0 / h)]


def zero_mode_pair(
    o: Orbit, t_end: float | None = None, tol: Tolerances = TIGHT
) -> FundamentalPair:
    """``(d/dh) xi_h`` and ``xi_t`` on ``[0, t_end]``.

    The h-derivative is integrated from the variational system of the orbit
    equation, starting at ``(1/g'(xi_-), 0)``.
    """
    p = o.params
    if o.solution_class.kind is not SolutionKind.PERIODIC:
        raise InadmissibleInput("the h-derivative pair needs an interior periodic orbit")
    t_end = o.span[1] if t_end is None else float(t_end)
    xi0 = canonical_minimum(p, o.h)
    y0 = [xi0, 0.0, 1.0 / float(stationary_g_prime(p, xi0)), 0.0]
    sol = solve(_variation_rhs, y0, (0.0, t_end), tol, args=(p.n, p.k, o.h)).sol
    n, k, h = p.n, p.k, o.h

    def minus(t):
        xi, z, dxi, dz = sol(t)
        slope, q, S, zt = local_terms(n, k, h, xi, z)
        dz_t = -(n / (2 * k)) * S * (1.0 - S) * (n * dxi + 1.0 / h)
        q_t = -2.0 * slope * q * zt
        return dxi, q * dz, q_t * dz + q * dz_t

    def plus(t):
        xi, z, _, _ = sol(t)
        slope, q, S, zt = local_terms(n, k, h, xi, z)
        ztt = -(n * n / (2 * k)) * S * (1.0 - S) * slope
        return slope, q * zt, -2.0 * slope * q * zt * zt + q * ztt

    return FundamentalPair(mode_for(p, 0.0), minus, plus)


def _period_at(p: Params, h: float, tol: Tolerances) -> float:
    o = build_orbit(p, h, (0.0, 1.0), tol)
    return o.period


def period_derivative(p: Params, h: float, rel_step: float = 1e-5, tol: Tolerances = TIGHT) -> float:
    """``T'(h)``: centred difference with one Richardson step."""
    d = rel_step * h

    def central(step):
        return (_period_at(p, h + step, tol) - _period_at(p, h - step, tol)) / (2 * step)

    return (4.0 * central(0.5 * d) - central(d)) / 3.0


# ---------------------------------------------------------- Liouville

def discriminant(p: Params) -> int:
    n, k = p.n, p.k
    return 2 * (n + 3) * k * k - 4 * (n + 1) * k - n * (n - 1)


def c_bound(p: Params) -> float:
    """Constant ``C_n`` with ``max E <= -C_n`` for ``lam >= 2n``."""
    if discriminant(p) >= 0:
        return 2.0 + 2.0 / (p.n - 1)
    return (p.n + 1) / 2.0


def _level_s(n, h, xi):
    if h == 0.0:
        return np.ones_like(xi)
    return 0.5 * (1.0 - np.tanh(0.5 * (math.log(h) + n * xi)))


def liouville(o: Orbit, m: ModeSpec) -> tuple[Callable, Callable]:
    """``V`` and ``E`` with ``V L[V^{-1} psi] = psi'' + E psi``.

    ``V = e^{(1 - n/2k) xi} (e^{-n xi} + h)^{(k-1)/2k}``; ``E`` is the closed
    expression in ``xi``, ``xi_t`` and ``h``.
    """
    p = o.params
    if p.regime is Regime.SUPERCRITICAL:
        raise InadmissibleInput("the Liouville normal form is used for 2k <= n only")
    n, k, h, lam = p.n, p.k, o.h, m.lambda_j

    def V(t):
        xi = o.derivatives(t)[0]
        return np.exp((1 - n / (2 * k)) * xi) * (np.exp(-n * xi) + h) ** ((k - 1) / (2 * k))

    def E(t):
        xi, slope, _, _, q, _ = o.derivatives(t)
        s = _level_s(n, h, xi)
        p2 = slope * slope
        const = (-(2 * k - n) ** 2 - n * (n - 2 * k) * (k - 2) * s + n * n * (k - 1) * s * s) / (4 * k * k)
        kin = (
            n * n * (k - 1) / (2 * k) * s * (1 - s)
            + n * (n - 2 * k) * s / (4 * k)
            + n * n * (k - 1) * s * s / (4 * k)
        )
        ca = n * (k - 1) / (k * (n - 1)) * s + (n - k) / (k * (n - 1))
        return const - kin * p2 - lam * ca + n * s * q

    return V, E


def max_e(o: Orbit, m: ModeSpec, samples: int = 4001) -> float:
    """Maximum of ``E`` over one period (or the whole span if aperiodic)."""
    _, E = liouville(o, m)
    hi = o.period if o.period is not None else o.span[1]
    return float(np.max(E(np.linspace(0.0, hi, samples))))


# ---------------------------------------------------------- monodromy

@dataclass(frozen=True)
class Monodromy:
    """Period map of a mode equation in ``(phi, phi')`` coordinates."""

    lam: float
    M: np.ndarray
    det: float
    multipliers: tuple[complex, complex]
    rho: float
    jordan_flag: bool
    period: float
    pieces: int

    @property
    def trace(self) -> float:
        return float(np.trace(self.M))


def _batch_rhs(n, k, h, lams):
    lams = np.asarray(lams, float)
    L = lams.size

    def rhs(t, y):
        Y = y.reshape(-1, 2 + 4 * L)
        xi, z = Y[:, 0], Y[:, 1]
        slope, q, S, zt = local_terms(n, k, h, xi, z)
        b, c = _terms(n, k, h, xi[:, None], z[:, None], lams[None, :])
        F = Y[:, 2:].reshape(-1, L, 2, 2)  # (piece, lambda, component, column)
        out = np.empty_like(Y)
        out[:, 0] = slope
        out[:, 1] = zt
        dF = np.empty_like(F)
        dF[:, :, 0, :] = F[:, :, 1, :]
        dF[:, :, 1, :] = -b[:, :, None] * F[:, :, 1, :] - c[:, :, None] * F[:, :, 0, :]
        out[:, 2:] = dF.reshape(Y.shape[0], -1)
        return out.ravel()

    return rhs


def _pieces_needed(p: Params, lam: float, T: float) -> int:
    # crude growth-rate bound: sqrt(lam max C/A + n) + max|B/A|/2
    ca_max = (p.n * (p.k - 1) / p.k + (p.n - p.k) / p.k) / (p.n - 1)
    rate = math.sqrt(lam * ca_max + p.n) + 0.5 * p.n
    return max(2, int(math.ceil(rate * T / 2.0)))


def _multipliers(M: np.ndarray, det: float):
    tr = float(np.trace(M))
    disc = tr * tr - 4.0 * det
    if disc < 0:
        root = complex(0.0, math.sqrt(-disc))
        return ((tr + root) / 2, (tr - root) / 2), False
    mu1 = 0.5 * (tr + math.copysign(math.sqrt(disc), tr))
    mu2 = det / mu1 if mu1 != 0 else 0.0
    return (complex(mu1), complex(mu2)), True


def monodromy_batch(o: Orbit, lams: Sequence[float], tol: Tolerances = TIGHT) -> list[Monodromy]:
    """Period maps for several eigenvalues along one periodic orbit.

    The period is cut into pieces short enough that each piece map stays
    well conditioned; all pieces are integrated together, each from the
    identity frame.  ``det M`` is the product of the piece determinants.
    """
    p = o.params
    if o.solution_class.kind is not SolutionKind.PERIODIC:
        raise InadmissibleInput(f"monodromy needs a periodic orbit, got {o.solution_class.kind.value}")
    if o.period is None:
        raise PeriodNotFound("orbit carries no period")
    lams = [mode_for(p, lam).lambda_j for lam in lams]
    T = o.period
    N = max(_pieces_needed(p, lam, T) for lam in lams)
    L = len(lams)
    starts = np.linspace(0.0, T, N + 1)[:-1]
    xi0, z0 = o.raw(starts)
    Y0 = np.zeros((N, 2 + 4 * L))
    Y0[:, 0], Y0[:, 1] = xi0, z0
    eye = np.tile(np.eye(2).ravel(), L)
    Y0[:, 2:] = eye
    sol = solve(_batch_rhs(p.n, p.k, o.h, lams), Y0.ravel(), (0.0, T / N), tol)
    Yend = sol.y[:, -1].reshape(N, 2 + 4 * L)
    frames = Yend[:, 2:].reshape(N, L, 2, 2)
    out = []
    for j, lam in enumerate(lams):
        M = np.eye(2)
        det = 1.0
        for i in range(N):
            Mi = frames[i, j]
            M = Mi @ M
            det *= Mi[0, 0] * Mi[1, 1] - Mi[0, 1] * Mi[1, 0]
        mus, real = _multipliers(M, det)
        if real:
            dom = max(abs(mus[0]), abs(mus[1]))
            rho = abs(math.log(dom)) / T
        else:
            rho = 0.0
        jordan = abs(np.trace(M) - 2.0) <= JORDAN_TRACE_TOL and abs(det - 1.0) <= JORDAN_DET_TOL
        out.append(Monodromy(lam, M, det, mus, rho, bool(jordan), T, N))
    return out


def monodromy(o: Orbit, m: ModeSpec, tol: Tolerances = TIGHT) -> Monodromy:
    m.check(o.params)
    return monodromy_batch(o, [m.lambda_j], tol)[0]


def _piece_frames(o: Orbit, lam: float, tol: Tolerances):
    p = o.params
    T = o.period
    N = _pieces_needed(p, lam, T)
    starts = np.linspace(0.0, T, N + 1)[:-1]
    xi0, z0 = o.raw(starts)
    Y0 = np.zeros((N, 6))
    Y0[:, 0], Y0[:, 1] = xi0, z0
    Y0[:, 2:] = np.eye(2).ravel()
    sol = solve(_batch_rhs(p.n, p.k, o.h, [lam]), Y0.ravel(), (0.0, T / N), tol)
    return sol.y[:, -1].reshape(N, 6)[:, 2:].reshape(N, 2, 2)


def zero_mode_frequency(p: Params, probe: float = 0.5, tol: Tolerances = TIGHT) -> float:
    """Small-oscillation frequency of the zero mode at the constant solution.

    Integrates the zero-mode equation along ``xi = y*`` over ``probe`` and
    reads ``omega`` off the trace of the resulting map.
    """
    ys = y_star(p)
    n, k = p.n, p.k
    h = float(np.exp((2 * k - n) * ys) - np.exp(-n * ys))
    rhs = _batch_rhs(n, k, h, [0.0])
    y0 = np.concatenate([[ys, 0.0], np.eye(2).ravel()])
    F = solve(rhs, y0, (0.0, probe), tol).y[2:, -1].reshape(2, 2)
    return math.acos(0.5 * np.trace(F)) / probe


# ------------------------------------------------------ Floquet pair

def _mode_rhs(t, y, n, k, h, lam):
    b, c = _terms(n, k, h, y[0], y[1], lam)
    slope, _, _, zt = local_terms(n, k, h, y[0], y[1])
    return [slope, zt, y[3], -b * y[3] - c * y[2]]


def _adj(A):
    return np.array([[A[1, 1], -A[0, 1]], [-A[1, 0], A[0, 0]]])


def _unit(v):
    v = np.asarray(v, float)
    v = v / np.linalg.norm(v)
    return v if v[0] >= 0 else -v


def _periodic_extension(base, mu: float, T: float, n, k, h, lam):
    def phi(t):
        t = np.asarray(t, float)
        j = np.floor(t / T)
        tau = np.clip(t - j * T, 0.0, T)
        xi, z, f0, f1 = base(tau)
        scale = mu ** j
        b, c = _terms(n, k, h, xi, z, lam)
        return scale * f0, scale * f1, scale * (-b * f1 - c * f0)

    return phi


def floquet_pair(o: Orbit, m: ModeSpec, tol: Tolerances = TIGHT) -> tuple[FundamentalPair, Monodromy]:
    """Decaying (``phi_minus``) and growing (``phi_plus``) Floquet solutions.

    Eigenvectors come from the columns of ``M`` and of ``M^{-1}``; the
    growing solution is integrated forward over one period, the decaying one
    backward, and both are extended by ``phi(t + jT) = mu^j phi(t)``.
    """
    p = o.params
    m.check(p)
    mono = monodromy(o, m, tol)
    if mono.multipliers[0].imag != 0.0:
        raise InadmissibleInput("complex multipliers: no real Floquet pair")
    frames = _piece_frames(o, m.lambda_j, tol)
    M = np.eye(2)
    Minv = np.eye(2)
    for Mi in frames:
        M = Mi @ M
        Minv = Minv @ _adj(Mi)
    mu_a, mu_b = (mono.multipliers[0].real, mono.multipliers[1].real)
    mu_g, mu_d = (mu_a, mu_b) if abs(mu_a) >= abs(mu_b) else (mu_b, mu_a)
    v_g = _unit(M[:, np.argmax(np.linalg.norm(M, axis=0))])
    v_d = _unit(Minv[:, np.argmax(np.linalg.norm(Minv, axis=0))])
    T = mono.period
    n, k, h, lam = p.n, p.k, o.h, m.lambda_j
    xi0 = canonical_minimum(p, h)
    grow = solve(_mode_rhs, [xi0, 0.0, *v_g], (0.0, T), tol, args=(n, k, h, lam)).sol
    decay = solve(_mode_rhs, [xi0, 0.0, *(mu_d * v_d)], (T, 0.0), tol, args=(n, k, h, lam)).sol
    pair = FundamentalPair(
        m,
        _periodic_extension(decay, mu_d, T, n, k, h, lam),
        _periodic_extension(grow, mu_g, T, n, k, h, lam),
    )
    return pair, mono


# ---------------------------------------------- variation of constants

def decay_rate(t: np.ndarray, values: np.ndarray, period: float | None = None) -> float:
    """Exponential decay rate fitted to ``|values|``.

    With a period, the log of the per-period maxima is regressed on the
    window midpoints (removes the oscillation); otherwise all samples are used.
    """
    a = np.abs(np.asarray(values, float))
    t = np.asarray(t, float)
    if period is None:
        keep = a > 0
        slope, _ = np.polyfit(t[keep], np.log(a[keep]), 1)
        return float(-slope)
    edges = np.arange(t[0], t[-1] + 1e-12, period)
    mids, peaks = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        sel = (t >= lo) & (t < hi)
        if np.any(sel) and np.max(a[sel]) > 0:
            mids.append(t[sel][np.argmax(a[sel])])
            peaks.append(np.max(a[sel]))
    if len(peaks) < 2:
        raise InadmissibleInput("decay fit needs at least two full periods")
    slope, _ = np.polyfit(mids, np.log(peaks), 1)
    return float(-slope)


@dataclass(frozen=True, eq=False)
class VCSolution:
    """Decaying particular solution sampled on a grid."""

    t: np.ndarray
    phi: np.ndarray
    dphi: np.ndarray
    a_coeff: float
    kernel: np.ndarray  # the mode's decaying homogeneous solution on the grid

    def __call__(self, t):
        return np.interp(t, self.t, self.phi)

    @property
    def remainder(self) -> np.ndarray:
        return self.phi - self.a_coeff * self.kernel


def _rev_cumulative(y, dx):
    return cumulative_simpson(y[::-1], dx=dx, initial=0.0)[::-1]


def vc_solve(
    o: Orbit,
    m: ModeSpec,
    r: Callable,
    beta: float,
    t_end: float = 15.0,
    dt: float = 1e-3,
    tol: Tolerances = TIGHT,
) -> VCSolution:
    """Decaying solution of ``L[phi] = r`` for ``|r| <~ e^{-beta t}``.

    Translational and higher modes use
    ``phi = y1 int_0^t y2 r/W + y2 int_t^inf y1 r/W`` with ``y1`` the decaying
    and ``y2`` the growing homogeneous solution; the zero mode uses
    ``phi = -y1 int_t^inf y2 r/W + y2 int_t^inf y1 r/W`` with
    ``y1 = xi_t`` and ``y2 = (d/dh) xi_h``.  ``W = y2 y1' - y1 y2'``.
    For translational modes with ``beta > 1`` the convergent
    ``int_0^inf y2 r/W`` multiplies ``y1 = e^{-t}(1 + xi_t)`` and is returned
    as ``a_coeff``.
    """
    p = o.params
    m.check(p)
    if o.solution_class.kind is not SolutionKind.PERIODIC:
        raise InadmissibleInput("variation of constants is set up on periodic orbits")
    if not beta > 0:
        raise InadmissibleInput(f"need beta > 0, got {beta}")
    if m.label is ModeLabel.ZERO:
        gamma = 0.0
        pair = None
    elif m.label is ModeLabel.TRANSLATIONAL:
        gamma = 1.0
        if abs(beta - 1.0) < RESONANCE_GAP:
            raise InadmissibleInput("beta = 1 is resonant with the translational kernel")
    else:
        pair, mono = floquet_pair(o, m, tol)
        gamma = mono.rho
        if abs(beta - gamma) < RESONANCE_GAP:
            raise InadmissibleInput(f"beta = {beta} is resonant with rho = {gamma:.6g}")
    t_max = t_end + 27.6 / (gamma + beta)
    steps = int(math.ceil(t_max / dt))
    t = np.linspace(0.0, steps * dt, steps + 1)
    dx = t[1] - t[0]
    rv = np.asarray(r(t), float) * np.ones_like(t)
    scale = np.max(np.abs(rv[t <= 1.0]))
    if scale > 0 and np.max(np.abs(rv) * np.exp(beta * t)) > 1e3 * scale * math.exp(beta):
        raise InadmissibleInput(f"right-hand side does not decay like e^(-{beta} t)")

    if m.label is ModeLabel.ZERO:
        zp = zero_mode_pair(o, t_end=t[-1], tol=tol)
        y1, y1p, _ = zp.phi_plus(t)
        y2, y2p, _ = zp.phi_minus(t)
    elif m.label is ModeLabel.TRANSLATIONAL:
        ext = o if o.span[1] >= t[-1] else build_orbit(p, o.h, (0.0, t[-1]))
        y1, y1p, _ = translational_minus(ext)(t)
        y2, y2p, _ = translational_plus(ext)(t)
    else:
        y1, y1p, _ = pair.phi_minus(t)
        y2, y2p, _ = pair.phi_plus(t)
    W = y2 * y1p - y1 * y2p

    a_coeff = 0.0
    if m.label is ModeLabel.ZERO:
        F = _rev_cumulative(y2 * rv / W, dx)
        G = _rev_cumulative(y1 * rv / W, dx)
        phi = -y1 * F + y2 * G
        dphi = -y1p * F + y2p * G
    else:
        g2 = y2 * rv / W
        G = _rev_cumulative(y1 * rv / W, dx)
        if m.label is ModeLabel.TRANSLATIONAL and beta > 1.0:
            tail = _rev_cumulative(g2, dx)
            a_coeff = float(tail[0])
            F = a_coeff - tail
        else:
            F = cumulative_simpson(g2, dx=dx, initial=0.0)
        phi = y1 * F + y2 * G
        dphi = y1p * F + y2p * G
    keep = t <= t_end + 1e-12
    return VCSolution(t[keep], phi[keep], dphi[keep], a_coeff, y1[keep])


# --------------------------------------------------------------- reports

def spectrum_record(o: Orbit, mono: Monodromy) -> dict:
    return {
        "n": o.params.n,
        "k": o.params.k,
        "h": o.h,
        "lambda": mono.lam,
        "rho": mono.rho,
        "det_M": mono.det,
        "trace_M": mono.trace,
        "jordan_flag": mono.jordan_flag,
    }


def e_trace(o: Orbit, m: ModeSpec, samples: int = 1001) -> np.ndarray:
    """Columns ``t, E`` over one period (or the orbit span if aperiodic)."""
    _, E = liouville(o, m)
    hi = o.period if o.period is not None else o.span[1]
    t = np.linspace(0.0, hi, samples)
    return np.column_stack([t, E(t)])
