"""Thin layer over :func:`scipy.integrate.solve_ivp` shared by every module.

Provides the tolerance record, a piecewise dense-output container that
covers spans integrated forward and backward from a common origin, and
sign-change root location polished on the dense output.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .errors import IntegrationFailure

__all__ = ["Tolerances", "DenseSolution", "solve", "locate_roots", "logcosh"]


@dataclass(frozen=True)
class Tolerances:
    rtol: float = 1e-10
    atol: float = 1e-12
    method: str = "DOP853"
    max_step: float = np.inf

    def tighter(self, factor: float = 100.0) -> "Tolerances":
        return Tolerances(self.rtol / factor, self.atol / factor, self.method, self.max_step)


TIGHT = Tolerances(rtol=1e-12, atol=1e-14)


def logcosh(z):
    """``log(cosh z)`` without overflow."""
    a = np.abs(z)
    return a + np.log1p(np.exp(-2.0 * a)) - np.log(2.0)


class DenseSolution:
    """Dense output stitched from one backward and one forward integration.

    Both pieces start at the same origin ``t0``; evaluation dispatches on the
    sign of ``t - t0``.
    """

    def __init__(self, t0: float, forward=None, backward=None, t_nodes=None, y_nodes=None):
        self.t0 = t0
        self.forward = forward
        self.backward = backward
        lo = backward.t_min if backward is not None else t0
        hi = forward.t_max if forward is not None else t0
        self.t_min, self.t_max = float(lo), float(hi)
        self.t_nodes = t_nodes
        self.y_nodes = y_nodes

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        scalar = t.ndim == 0
        tt = np.atleast_1d(t)
        if np.any(tt < self.t_min - 1e-12) or np.any(tt > self.t_max + 1e-12):
            raise ValueError(
                f"evaluation outside the integrated span [{self.t_min}, {self.t_max}]"
            )
        dim = self.y_nodes.shape[0]
        out = np.empty((dim, tt.size))
        fwd = tt >= self.t0
        if np.any(fwd):
            if self.forward is None:
                out[:, fwd] = self.y_nodes[:, [np.argmin(np.abs(self.t_nodes - self.t0))]]
            else:
                out[:, fwd] = self.forward(np.clip(tt[fwd], self.t0, self.t_max))
        if np.any(~fwd):
            out[:, ~fwd] = self.backward(np.clip(tt[~fwd], self.t_min, self.t0))
        return out[:, 0] if scalar else out


def solve(
    fun: Callable,
    y0: Sequence[float],
    t_span: tuple[float, float],
    tol: Tolerances,
    events=None,
    args=(),
):
    """Run ``solve_ivp`` with dense output; raise on failure."""
    sol = solve_ivp(
        fun,
        t_span,
        np.asarray(y0, dtype=float),
        method=tol.method,
        rtol=tol.rtol,
        atol=tol.atol,
        max_step=tol.max_step,
        dense_output=True,
        events=events,
        args=args,
    )
    if sol.status == -1:
        raise IntegrationFailure(sol.message)
    if not np.all(np.isfinite(sol.y)):
        raise IntegrationFailure("non-finite state encountered")
    return sol


def integrate_both_ways(fun, y0, t_span, tol: Tolerances, args=()) -> tuple[DenseSolution, dict]:
    """Integrate from ``t=0`` forward to ``t_span[1]`` and backward to ``t_span[0]``."""
    t_lo, t_hi = t_span
    fwd = bwd = None
    ts, ys = [], []
    nfev = nsteps = 0
    if t_lo < 0.0:
        sol = solve(fun, y0, (0.0, t_lo), tol, args=args)
        bwd = sol.sol
        ts.append(sol.t[::-1][:-1])
        ys.append(sol.y[:, ::-1][:, :-1])
        nfev += sol.nfev
        nsteps += sol.t.size - 1
    if t_hi > 0.0:
        sol = solve(fun, y0, (0.0, t_hi), tol, args=args)
        fwd = sol.sol
        ts.append(sol.t)
        ys.append(sol.y)
        nfev += sol.nfev
        nsteps += sol.t.size - 1
    else:
        ts.append(np.array([0.0]))
        ys.append(np.asarray(y0, dtype=float)[:, None])
    t_nodes = np.concatenate(ts)
    y_nodes = np.concatenate(ys, axis=1)
    dense = DenseSolution(0.0, fwd, bwd, t_nodes, y_nodes)
    return dense, {"nfev": nfev, "steps": nsteps}


def locate_roots(
    g: Callable[[np.ndarray], np.ndarray],
    t_nodes: np.ndarray,
    direction: int = 0,
    xtol: float = 1e-13,
) -> np.ndarray:
    """Roots of a continuous scalar function ``g`` bracketed by node sign changes.

    ``direction=+1`` keeps only upward crossings (``g`` goes from negative to
    non-negative), ``-1`` only downward ones.  A node where ``g`` is exactly
    zero counts as a root when the sign to its right matches ``direction``.
    Each bracket is polished with Brent's method on ``g``.
    """
    vals = g(t_nodes)
    roots = []
    for i in range(t_nodes.size - 1):
        a, b = vals[i], vals[i + 1]
        ta, tb = t_nodes[i], t_nodes[i + 1]
        if a == 0.0:
            if (direction >= 0 and b > 0) or (direction <= 0 and b < 0):
                roots.append(ta)
            continue
        if b == 0.0:
            continue  # picked up from the next interval
        if a < 0.0 < b and direction >= 0:
            roots.append(brentq(g, ta, tb, xtol=xtol, rtol=4 * np.finfo(float).eps))
        elif a > 0.0 > b and direction <= 0:
            roots.append(brentq(g, ta, tb, xtol=xtol, rtol=4 * np.finfo(float).eps))
    return np.array(sorted(set(roots)))
