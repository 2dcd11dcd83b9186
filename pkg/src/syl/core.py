"""Dimensional parameters, coordinate dictionary and radial Schouten eigenvalues.

Conventions: cylindrical time ``t = -ln|x|``, conformal factor
``g = e^{-2w} (dt^2 + dtheta^2)``.  For radial metrics ``w(t, theta) = xi(t)``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InadmissibleInput

__all__ = [
    "Regime",
    "Params",
    "RadialState",
    "SchoutenEigs",
    "Direction",
    "schouten_eigs",
    "sigma_j",
    "gamma_k_plus",
    "convert",
]


class Regime(str, enum.Enum):
    SUBCRITICAL = "Subcritical"      # 2k < n
    CRITICAL = "Critical"            # 2k = n
    SUPERCRITICAL = "Supercritical"  # 2k > n


@dataclass(frozen=True)
class Params:
    """Dimension ``n`` and symmetric-function index ``k``.

    ``c_norm`` is the normalisation ``2^{-k} binom(n, k)`` of the constant
    right-hand side, fixed once for the whole library.
    """

    n: int
    k: int
    c_norm: float = field(init=False)

    def __post_init__(self):
        if isinstance(self.n, bool) or isinstance(self.k, bool):
            raise InadmissibleInput("n and k must be integers")
        if int(self.n) != self.n or int(self.k) != self.k:
            raise InadmissibleInput(f"n and k must be integers, got n={self.n}, k={self.k}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "k", int(self.k))
        if self.n < 3:
            raise InadmissibleInput(f"need n >= 3, got n={self.n}")
        if not 1 <= self.k <= self.n:
            raise InadmissibleInput(f"need 1 <= k <= n, got k={self.k}, n={self.n}")
        object.__setattr__(self, "c_norm", math.comb(self.n, self.k) / 2**self.k)

    @property
    def regime(self) -> Regime:
        two_k = 2 * self.k
        if two_k < self.n:
            return Regime.SUBCRITICAL
        if two_k == self.n:
            return Regime.CRITICAL
        return Regime.SUPERCRITICAL


@dataclass(frozen=True)
class RadialState:
    xi: float
    xi_dot: float


@dataclass(frozen=True)
class SchoutenEigs:
    """Eigenvalues of the Schouten tensor of a radial metric w.r.t. ``|dx|^2``.

    ``lam`` has multiplicity ``n-1``; the remaining eigenvalue is ``lam + mu``.
    """

    lam: float
    mu: float
    t: float = 0.0

    def multiset(self, n: int) -> np.ndarray:
        return np.array([self.lam] * (n - 1) + [self.lam + self.mu])


def schouten_eigs(p: Params, s: RadialState, xi_ddot: float, t: float) -> SchoutenEigs:
    e2t = math.exp(2.0 * t)
    lam = 0.5 * e2t * (1.0 - s.xi_dot**2)
    mu = e2t * (xi_ddot + s.xi_dot**2 - 1.0)
    return SchoutenEigs(lam=lam, mu=mu, t=t)


def sigma_j(p: Params, e: SchoutenEigs, j: int) -> float:
    """j-th elementary symmetric function of ``{lam (x n-1), lam + mu}``.

    Uses ``(1/n) binom(n, j) lam^{j-1} (n lam + j mu)``; no conformal prefactor.
    """
    if not 1 <= j <= p.n:
        raise InadmissibleInput(f"need 1 <= j <= n={p.n}, got j={j}")
    c_nj = math.comb(p.n, j) / p.n
    return c_nj * e.lam ** (j - 1) * (p.n * e.lam + j * e.mu)


def gamma_k_plus(p: Params, e: SchoutenEigs) -> bool:
    """Strict membership test: sigma_j > 0 for every j = 1..k (no tolerance)."""
    return all(sigma_j(p, e, j) > 0.0 for j in range(1, p.k + 1))


class Direction(str, enum.Enum):
    """Dictionary between the ball picture and the cylinder picture.

    ``U = e^{-(n-2) w / 2}``, ``u(r) = r^{-(n-2)/2} U`` and ``v = e^{w - t}``
    with ``r = e^{-t}``.
    """

    W_TO_U = "w->U"
    U_TO_W = "U->w"
    W_TO_BALL_U = "w->u"
    BALL_U_TO_W = "u->w"
    W_TO_V = "w->v"
    V_TO_W = "v->w"


def convert(p: Params, value, t, direction: Direction | str):
    """Map between ``w`` and ``U``, the ball function ``u`` or ``v``.

    Works elementwise on arrays.  Converting *from* ``U``, ``u`` or ``v``
    requires strictly positive input.
    """
    direction = Direction(direction)
    value = np.asarray(value, dtype=float)
    t = np.asarray(t, dtype=float)
    half = 0.5 * (p.n - 2)
    if direction in (Direction.U_TO_W, Direction.BALL_U_TO_W, Direction.V_TO_W):
        if np.any(~(value > 0)):
            raise InadmissibleInput(f"{direction.value}: input must be positive")
    if direction is Direction.W_TO_U:
        out = np.exp(-half * value)
    elif direction is Direction.U_TO_W:
        out = -np.log(value) / half
    elif direction is Direction.W_TO_BALL_U:
        # u(r) = r^{-(n-2)/2} U with r = e^{-t}
        out = np.exp(half * (t - value))
    elif direction is Direction.BALL_U_TO_W:
        out = t - np.log(value) / half
    elif direction is Direction.W_TO_V:
        out = np.exp(value - t)
    else:
        out = np.log(value) + t
    return out[()] if out.ndim == 0 else out
