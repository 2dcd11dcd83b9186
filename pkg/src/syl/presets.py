"""Ready-made matching experiments.

``sigma``: the radial sigma_k equation with an exponentially decaying forcing.
``k1``: the scalar-curvature case in ``psi = e^{-(n-2) xi / 2}`` variables.
``constant``: a manufactured trajectory spiralling into the cylinder solution.
``adversarial``: forcing ``0.1 / (1 + t)``, whose tail integral diverges.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .core import Params, Regime
from .errors import InadmissibleInput, IntegrationFailure, MatchFailure
from .match import (
    Case,
    EnvelopeCheck,
    MatchProblem,
    MatchResult,
    Trajectory,
    integrate_perturbed,
    match_orbit,
    verify_envelope,
)
from .radial import build_orbit, cylrad_first_integral, cylrad_rhs, hstar, k1_constants, xi_minus, y_star

__all__ = ["Experiment", "sigma", "k1", "constant", "adversarial", "run", "report"]

# safety factor applied to sampled non-degeneracy constants
A_MARGIN = 0.9


@dataclass(eq=False)
class Experiment:
    problem: MatchProblem
    traj: Trajectory
    meta: dict = field(default_factory=dict)


def _sigma_f(n, k):
    def f(x, y):
        q = 1.0 - np.asarray(x, float) ** 2
        return (n / (2 * k)) * np.exp(-2 * k * np.asarray(y, float)) * q ** (1 - k) - ((n - 2 * k) / (2 * k)) * q

    return f


def _sigma_H(n, k, h_inf):
    def H(x, y):
        y = np.asarray(y, float)
        q = 1.0 - np.asarray(x, float) ** 2
        return h_inf + np.exp(-n * y) - np.exp((2 * k - n) * y) * q**k

    return H


def _exp_forcing(scale, rate):
    def e1(t):
        return scale * np.exp(-rate * np.asarray(t, float))

    return e1


def _a_nd_1d(H, m, eps, l):
    y = m + np.concatenate([np.linspace(-eps, -eps / 400, 400), np.linspace(eps / 400, eps, 400)])
    return A_MARGIN * float(np.min(np.abs(H(0.0, y) - H(0.0, m)) / np.abs(y - m) ** l))


def _check_periodic(p: Params, h: float):
    if p.regime is not Regime.SUBCRITICAL:
        raise InadmissibleInput("periodic matching needs 2k < n")
    if not 0 < h < hstar(p):
        raise InadmissibleInput(f"need 0 < h < h* = {hstar(p):.15g}, got h={h}")


def sigma(
    n: int,
    k: int,
    h: float,
    e1_scale: float = 0.1,
    e1_rate: float = 1.0,
    shift: float = 1.0,
    offset: float = 0.0,
    periods: int = 12,
    e1=None,
) -> Experiment:
    """Radial equation forced by ``e1_scale * e^{-e1_rate t}``.

    Starts at ``psi_h(-shift) + (offset, 0)``.  The limiting first-integral
    value ``h_inf`` is read off the end of the trajectory and fixes ``H`` and
    the reference minimum.
    """
    p = Params(n, k)
    _check_periodic(p, h)
    orb = build_orbit(p, h)
    T = orb.period
    xi_s, dxi_s = orb.state(abs(shift))
    init = (float(xi_s) + offset, float(-np.sign(shift) * dxi_s))
    f = _sigma_f(n, k)
    e1 = _exp_forcing(e1_scale, e1_rate) if e1 is None else e1
    span = (0.0, periods * T)
    provisional = MatchProblem(f, _sigma_H(n, k, h), e1, xi_minus(p, h))
    traj = integrate_perturbed(provisional, init, span)
    xi_end, dxi_end = traj(span[1])
    h_inf = float(np.exp((2 * k - n) * xi_end) * (1 - dxi_end**2) ** k - np.exp(-n * xi_end))
    if not 0 < h_inf < hstar(p):
        raise MatchFailure(f"limiting first integral {h_inf:.6g} left the periodic range")
    m = xi_minus(p, h_inf)
    eps1 = min(0.1, 0.5 * (y_star(p) - m))
    H = _sigma_H(n, k, h_inf)
    prob = MatchProblem(f, H, e1, m, l=1.0, A_nd=_a_nd_1d(H, m, eps1, 1.0), eps1=eps1)
    traj = Trajectory(traj.t, traj.y, traj.dense, prob)
    meta = {"preset": "sigma", "n": n, "k": k, "h": h, "h_inf": h_inf, "shift": shift,
            "T_h": T, "expected_shift": float(np.mod(shift, T))}
    return Experiment(prob, traj, meta)


def _k1_potential(n):
    c = (n - 2) ** 2 / 4.0

    def V(y):
        y = np.asarray(y, float)
        return c * (y ** (2 * n / (n - 2)) - y**2)

    return V


def k1(
    n: int,
    h: float,
    e1_scale: float = 0.1,
    e1_rate: float = 1.0,
    shift: float = 1.0,
    offset: float = 0.0,
    periods: int = 12,
) -> Experiment:
    """Scalar-curvature case, ``psi'' = ((n-2)^2/4) psi - (n(n-2)/4) psi^{(n+2)/(n-2)} + e1``.

    ``H(x, y) = x^2 + ((n-2)^2/4)(y^{2n/(n-2)} - y^2) - D_inf``.  The minimum
    of ``psi`` sits at the maximum of ``xi``.
    """
    p = Params(n, 1)
    _check_periodic(p, h)
    consts = k1_constants(n)
    orb = build_orbit(p, h)
    T = orb.period
    xi_s, dxi_s = orb.state(abs(shift))
    dxi_s = -np.sign(shift) * dxi_s
    psi0 = math.exp(-(n - 2) * float(xi_s) / 2)
    init = (psi0 + offset, -(n - 2) / 2 * psi0 * float(dxi_s))

    def f(x, y):
        return cylrad_rhs(n, y)

    e1 = _exp_forcing(e1_scale, e1_rate)
    V = _k1_potential(n)
    provisional = MatchProblem(f, lambda x, y: cylrad_first_integral(n, y, x), e1, consts.eps0 / 2)
    traj = integrate_perturbed(provisional, init, (0.0, periods * T))
    y_end, x_end = traj(periods * T)
    D_inf = float(cylrad_first_integral(n, y_end, x_end))
    if not consts.Dstar < D_inf < 0:
        raise MatchFailure(f"limiting level D_inf={D_inf:.6g} outside (D*, 0)")
    m = brentq(lambda y: float(V(y)) - D_inf, 1e-300 ** (1 / n), consts.eps0, xtol=1e-15, rtol=1e-15)

    def H(x, y):
        return np.asarray(x, float) ** 2 + V(y) - D_inf

    eps1 = min(0.1, 0.5 * (consts.eps0 - m), 0.5 * m)
    prob = MatchProblem(f, H, e1, m, l=1.0, A_nd=_a_nd_1d(H, m, eps1, 1.0), eps1=eps1)
    traj = Trajectory(traj.t, traj.y, traj.dense, prob)
    meta = {"preset": "k1", "n": n, "h": h, "D_inf": D_inf, "Dstar": consts.Dstar,
            "D_h": -((n - 2) ** 2 / 4) * h, "shift": shift, "T_h": T,
            "expected_shift": float(np.mod(shift + T / 2, T))}
    return Experiment(prob, traj, meta)


def constant(
    n: int,
    k: int,
    amplitude: float = 0.05,
    rate: float = 0.5,
    omega: float | None = None,
    t_end: float = 40.0,
) -> Experiment:
    """Manufactured ``beta = y* + amplitude e^{-rate t} cos(omega t)`` at ``h = h*``.

    The forcing is ``e1 = beta'' - f(beta', beta)``, so the trajectory
    reproduces ``beta`` and spirals into the cylinder solution.
    """
    p = Params(n, k)
    if p.regime is not Regime.SUBCRITICAL:
        raise InadmissibleInput("the cylinder solution exists for 2k < n only")
    m = y_star(p)
    w = math.sqrt(n - 2 * k) if omega is None else omega
    f = _sigma_f(n, k)

    def beta(t):
        t = np.asarray(t, float)
        e = amplitude * np.exp(-rate * t)
        c, s = np.cos(w * t), np.sin(w * t)
        return m + e * c, e * (-rate * c - w * s), e * ((rate * rate - w * w) * c + 2 * rate * w * s)

    def e1(t):
        b, db, ddb = beta(t)
        return ddb - f(db, b)

    H = _sigma_H(n, k, hstar(p))
    eps1 = 0.1
    u = np.linspace(-eps1, eps1, 81)
    X, Y = np.meshgrid(u, u)
    r2 = X**2 + Y**2
    keep = (np.abs(X) + np.abs(Y) <= eps1) & (r2 > 0)
    A = A_MARGIN * float(np.min(H(X[keep], m + Y[keep]) / r2[keep]))
    prob = MatchProblem(f, H, e1, m, l=2.0, A_nd=A, eps1=eps1, case=Case.CONSTANT)
    b0, db0, _ = beta(0.0)
    traj = integrate_perturbed(prob, (float(b0), float(db0)), (0.0, t_end))
    meta = {"preset": "constant", "n": n, "k": k, "h": hstar(p), "amplitude": amplitude, "rate": rate}
    return Experiment(prob, traj, meta)


def adversarial(n: int = 5, k: int = 2, h: float = 0.3, periods: int = 12) -> Experiment:
    """Forcing ``0.1 / (1 + t)``: violates integrability of the tail."""

    def e1(t):
        return 0.1 / (1.0 + np.asarray(t, float))

    exp = sigma(n, k, h, periods=periods, e1=e1)
    exp.meta["preset"] = "adversarial"
    return exp


def run(exp: Experiment) -> tuple[MatchResult | None, EnvelopeCheck | None, str | None]:
    """Match and verify; hypothesis violations come back as a message, not an exception."""
    try:
        res = match_orbit(exp.traj, exp.problem)
    except MatchFailure as err:
        return None, None, str(err)
    chk = verify_envelope(res, exp.problem, exp.traj)
    return res, chk, None


def report(exp: Experiment, res: MatchResult | None, chk: EnvelopeCheck | None, err: str | None) -> dict:
    out = dict(exp.meta)
    if res is None:
        out.update({"s_inf": None, "T": None, "num_windows": 0, "C_fit": None, "ok": False,
                    "tau": [], "delta": [], "error": err})
        return out
    ok = chk.ok and (res.case1_ok if res.case1_ok is not None else True)
    out.update({
        "s_inf": res.s_inf,
        "T": res.T,
        "num_windows": res.num_windows,
        "C_fit": chk.C_fit,
        "ok": bool(ok),
        "tau": res.tau.tolist(),
        "delta": res.delta.tolist(),
        "tail_bound": res.tail,
        "integrable": chk.integrable,
        "envelope_rate": chk.rate,
        "near_min_ok": bool(np.all(res.near_min[2:])) if res.near_min.size > 2 else None,
        "case1_ok": res.case1_ok,
    })
    return out
