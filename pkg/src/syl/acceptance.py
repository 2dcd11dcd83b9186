"""Acceptance checks run by ``syl selftest`` and the test suite.

Each check returns a :class:`CriterionResult`; ``run_all`` evaluates them in
order.  ``quick`` shrinks the grids; ``tol`` overrides the orbit integration
tolerances (a loose value is the negative control).
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.optimize import minimize_scalar

from . import presets
from .core import Params, RadialState
from .integrate import Tolerances
from .linear import (
    c_bound,
    coeffs,
    floquet_pair,
    liouville,
    mode_for,
    mode_residual,
    monodromy,
    monodromy_batch,
    period_derivative,
    translational_minus,
    translational_plus,
    vc_solve,
    zero_mode_pair,
    zero_plus,
    decay_rate,
)
from .radial import (
    build_orbit,
    correction_exponent,
    cylrad_rhs,
    first_integral,
    hstar,
    k1_constants,
    stationary_g,
    y_star,
)

__all__ = ["CriterionResult", "CRITERIA", "run_all", "format_line"]


@dataclass(frozen=True)
class CriterionResult:
    number: int
    name: str
    passed: bool
    detail: str
    seconds: float


def format_line(r: CriterionResult) -> str:
    status = "PASS" if r.passed else "FAIL"
    return f"[{status}] {r.number:2d}. {r.name}: {r.detail} ({r.seconds:.2f}s)"


def _h_grid(p: Params, count: int) -> list[float]:
    return list(hstar(p) * np.linspace(0.05, 0.95, count))


# 1 ------------------------------------------------------------------------
def closed_form_orbit(quick=False, tol=Tolerances()):
    cases = [(3, 1), (4, 1), (5, 2), (6, 2), (7, 3), (9, 4)]
    worst, slowest = 0.0, 0.0
    t = np.linspace(0.0, 20.0, 4001)
    for n, k in cases:
        t0 = time.perf_counter()
        o = build_orbit(Params(n, k), 0.0, (0.0, 20.0), tol)
        err = np.max(np.abs(o.state(t)[0] - np.log(np.cosh(t))))
        slowest = max(slowest, time.perf_counter() - t0)
        worst = max(worst, float(err))
    ok = worst <= 1e-8 and slowest < 1.0
    return ok, f"max |xi - ln cosh t| = {worst:.2e} (<= 1e-8), slowest case {slowest:.3f}s (< 1s)"


# 2 ------------------------------------------------------------------------
def conservation(quick=False, tol=Tolerances()):
    worst = 0.0
    for n, k in [(5, 2), (7, 3)]:
        p = Params(n, k)
        for frac in ([0.3] if quick else [0.1, 0.3, 0.5]):
            h = frac * hstar(p)
            T = build_orbit(p, h, (0.0, 1.0), tol).period
            o = build_orbit(p, h, (0.0, 10.0 * T), tol)
            t = np.concatenate([o.t, np.linspace(0.0, 10.0 * T, 5001)])
            xi, dxi = o.state(t)
            drift = max(abs(first_integral(p, RadialState(a, b)) - h) for a, b in zip(xi, dxi))
            worst = max(worst, drift)
    return worst <= 1e-8, f"max first-integral drift over 10 periods = {worst:.2e} (<= 1e-8)"


# 3 ------------------------------------------------------------------------
def constants(quick=False, tol=Tolerances()):
    err_h = 0.0
    for n in range(3, 11):
        for k in range(1, (n + 1) // 2):
            if 2 * k >= n:
                continue
            p = Params(n, k)
            res = minimize_scalar(lambda y: -float(stationary_g(p, y)), bounds=(0.0, 3 * y_star(p)),
                                  method="bounded", options={"xatol": 1e-12})
            err_h = max(err_h, abs(-res.fun - hstar(p)))
    err_d = max(abs(abs(k1_constants(n).Dstar) - (n - 2) ** 2 / 4 * hstar(Params(n, 1))) for n in range(3, 11))
    err_s = max(abs(float(cylrad_rhs(n, k1_constants(n).eps0))) for n in range(3, 11))
    ok = err_h <= 1e-10 and err_d <= 1e-13 and err_s <= 1e-12
    return ok, f"h* vs max g {err_h:.1e}, |D*| identity {err_d:.1e}, cylinder stationarity {err_s:.1e}"


# 4 ------------------------------------------------------------------------
def kernel_residuals(quick=False, tol=Tolerances()):
    worst, worst_abs_plus = 0.0, 0.0
    cases = [(5, 2, 0.3)] if quick else [(5, 2, 0.3), (7, 3, 0.3), (9, 4, 0.6)]
    for n, k, frac in cases:
        p = Params(n, k)
        h = frac * hstar(p)
        T = build_orbit(p, h).period
        o = build_orbit(p, h, (0.0, 3.0 * T + 1.0))
        t = np.linspace(0.0, 3.0 * T, 3001)
        zero, trans = mode_for(p, 0), mode_for(p, n - 1)
        r = [
            mode_residual(o, zero, zero_plus(o))(t),
            mode_residual(o, zero, zero_mode_pair(o, 3.0 * T + 1.0).phi_minus)(t),
            mode_residual(o, trans, translational_minus(o))(t),
        ]
        plus = mode_residual(o, trans, translational_plus(o))(t)
        worst_abs_plus = max(worst_abs_plus, float(np.max(np.abs(plus))))
        # e^{t}(1 - xi_t) reaches ~e^{3T}; its residual is measured relative to e^{t}
        r.append(plus * np.exp(-t))
        worst = max(worst, max(float(np.max(np.abs(x))) for x in r))
    return worst <= 1e-7, (
        f"max residual {worst:.2e} (<= 1e-7; e^t basis weighted by e^-t, unweighted {worst_abs_plus:.1e})"
    )


# 5 ------------------------------------------------------------------------
def floquet(quick=False, tol=Tolerances()):
    t0 = time.perf_counter()
    det_err = rho_err = tr_err = 0.0
    jordan = True
    count = 0
    pairs = [(5, 2), (9, 4)] if quick else [(5, 2), (6, 2), (7, 3), (9, 4)]
    for n, k in pairs:
        p = Params(n, k)
        for h in _h_grid(p, 3 if quick else 8):
            o = build_orbit(p, h)
            ms = monodromy_batch(o, [0.0, n - 1, 2 * n, 3 * n])
            count += len(ms)
            det_err = max(det_err, max(abs(m.det - 1.0) for m in ms))
            rho_err = max(rho_err, abs(ms[1].rho - 1.0))
            tr_err = max(tr_err, abs(ms[0].trace - 2.0))
            jordan = jordan and ms[0].jordan_flag
    secs = time.perf_counter() - t0
    ok = det_err <= 1e-8 and rho_err <= 1e-6 and tr_err <= 1e-6 and jordan and secs < 30
    return ok, (
        f"{count} maps: |det-1| {det_err:.1e}, |rho_trans-1| {rho_err:.1e}, "
        f"|tr_zero-2| {tr_err:.1e}, jordan {jordan}, {secs:.1f}s (< 30s)"
    )


# 6 ------------------------------------------------------------------------
def liouville_bound(quick=False, tol=Tolerances()):
    worst_gap = -math.inf
    min_rho_margin = math.inf
    pairs = [(5, 2), (9, 4)] if quick else [(5, 2), (6, 2), (7, 3), (9, 4), (4, 2), (6, 3)]
    for n, k in pairs:
        p = Params(n, k)
        lams = [2 * n, 2 * n + 2, 3 * n]
        cn = c_bound(p)
        if 2 * k < n:
            for h in _h_grid(p, 3 if quick else 5):
                o = build_orbit(p, h)
                t = np.linspace(0.0, o.period, 4001)
                for lam in lams:
                    worst_gap = max(worst_gap, float(np.max(liouville(o, mode_for(p, lam))[1](t))) + cn)
                for m in monodromy_batch(o, lams):
                    min_rho_margin = min(min_rho_margin, m.rho - math.sqrt(2.0))
        else:
            for h in [0.2, 0.5, 0.8]:
                o = build_orbit(p, h, (0.0, 30.0))
                t = np.linspace(0.0, 30.0, 6001)
                for lam in lams:
                    worst_gap = max(worst_gap, float(np.max(liouville(o, mode_for(p, lam))[1](t))) + cn)
    ok = worst_gap <= 1e-9 and min_rho_margin >= 0.01
    return ok, f"max_t E + C_n = {worst_gap:.2e} (<= 1e-9), min rho - sqrt2 = {min_rho_margin:.3f} (>= 0.01)"


# 7 ------------------------------------------------------------------------
def period_identity(quick=False, tol=Tolerances()):
    worst_id = worst_p = 0.0
    cases = [(5, 2, 0.3)] if quick else [(5, 2, 0.1), (5, 2, 0.3), (5, 2, 0.5), (7, 3, 0.3)]
    for n, k, frac in cases:
        p = Params(n, k)
        h = frac * hstar(p)
        o = build_orbit(p, h)
        T = o.period
        Tp = period_derivative(p, h)
        pair = zero_mode_pair(o, 4.0 * T)
        t = np.linspace(0.0, 3.0 * T, 3001)
        m0 = pair.phi_minus(t)[0]
        m1 = pair.phi_minus(t + T)[0]
        x1 = pair.phi_plus(t + T)[0]
        x0 = pair.phi_plus(t)[0]
        worst_id = max(worst_id, float(np.max(np.abs(m1 + Tp * x1 - m0))))
        per = lambda s, a, b: a + (Tp / T) * s * b
        worst_p = max(worst_p, float(np.max(np.abs(per(t + T, m1, x1) - per(t, m0, x0)))))
    ok = worst_id <= 1e-6 and worst_p <= 1e-6
    return ok, f"identity residual {worst_id:.2e}, periodic part {worst_p:.2e} (<= 1e-6)"


# 8 ------------------------------------------------------------------------
def manufactured(quick=False, tol=Tolerances()):
    p = Params(5, 2)
    o = build_orbit(p, 0.3, (0.0, 80.0))  # covers the quadrature horizon
    T = o.period
    lc = coeffs(o)
    worst = 0.0
    for lam in ([4.0, 10.0] if quick else [0.0, 4.0, 10.0, 15.0]):
        m = mode_for(p, lam)

        def r(t, lam=lam):
            t = np.asarray(t, float)
            return (4.0 - 2.0 * lc.B_over_A(t) + lc.potential(t, lam)) * np.exp(-2.0 * t)

        sol = vc_solve(o, m, r, 2.0, t_end=15.0)
        diff = sol.remainder - np.exp(-2.0 * sol.t)
        if m.label.value == "Higher":
            # remove the component along the decaying Floquet solution
            c = np.dot(diff, sol.kernel) / np.dot(sol.kernel, sol.kernel)
            diff = diff - c * sol.kernel
        worst = max(worst, float(np.max(np.abs(diff))))
    margin = math.inf
    for lam, beta in [(10.0, 1.3), (4.0, 1.3)]:
        m = mode_for(p, lam)
        rho = monodromy(o, m).rho
        sol = vc_solve(o, m, lambda t, b=beta: np.exp(-b * np.asarray(t, float)), beta, t_end=4.0 * T)
        sel = sol.t >= T
        rate = decay_rate(sol.t[sel], sol.remainder[sel], T)
        margin = min(margin, rate - (min(beta, rho) - 0.05))
    ok = worst <= 1e-6 and margin >= 0.0
    return ok, f"manufactured error {worst:.2e} (<= 1e-6), decay-rate margin {margin:.3f} (>= 0)"


# 9 ------------------------------------------------------------------------
def matching(quick=False, tol=Tolerances()):
    notes = []
    ok = True
    exp0 = presets.sigma(5, 2, 0.3, e1_scale=0.0, shift=1.0)
    r0, c0, e0 = presets.run(exp0)
    shift_err = abs(r0.s_inf - 1.0) if r0 is not None else math.inf
    ok &= shift_err <= 1e-6 and c0 is not None and c0.ok
    notes.append(f"shift err {shift_err:.1e}")
    runs = [("sigma", presets.sigma(5, 2, 0.3, e1_scale=0.1, e1_rate=1.0))]
    if not quick:
        runs.append(("k1", presets.k1(4, 0.3 * hstar(Params(4, 1)), e1_scale=0.1, e1_rate=1.0)))
    for name, exp in runs:
        res, chk, err = presets.run(exp)
        good = res is not None and chk.ok and math.isfinite(chk.C_fit) and chk.rate is not None and chk.rate > 0.5
        if name == "k1":
            good &= exp.meta["Dstar"] <= exp.meta["D_inf"] <= 0.0
        ok &= bool(good)
        if res is None:
            notes.append(f"{name}: {err}")
        else:
            notes.append(f"{name}: C_fit {chk.C_fit:.2f}, rate {chk.rate:.2f}, windows {res.num_windows}")
    if not quick:
        res, chk, err = presets.run(presets.adversarial())
        notes.append(f"adversarial demo ok={bool(chk.ok) if chk else False} (expected False)")
    return bool(ok), "; ".join(notes)


# 10 -----------------------------------------------------------------------
def asymptotics(quick=False, tol=Tolerances()):
    p = Params(4, 2)
    o = build_orbit(p, 0.5, (0.0, 30.0), tol)
    slope_err = abs(float(o.state(30.0)[1]) - math.sqrt(1.0 - math.sqrt(0.5)))
    rel = 0.0
    for n, k in ([(3, 2)] if quick else [(3, 2), (5, 3), (7, 4)]):
        q = Params(n, k)
        o = build_orbit(q, 1.0, (0.0, 40.0), tol)
        alpha, _ = correction_exponent(o, (20.0, 40.0))
        rel = max(rel, abs(alpha - (2 - n / k)) / (2 - n / k))
    ok = slope_err <= 1e-4 and rel <= 0.1
    return ok, f"cone slope err {slope_err:.1e} (<= 1e-4), correction exponent rel err {rel:.1e} (<= 0.1)"


CRITERIA: list[tuple[int, str, Callable]] = [
    (1, "closed-form orbit", closed_form_orbit),
    (2, "first-integral conservation", conservation),
    (3, "h* and k=1 constants", constants),
    (4, "kernel residuals", kernel_residuals),
    (5, "Floquet invariants", floquet),
    (6, "Liouville bound and exponent floor", liouville_bound),
    (7, "period identity", period_identity),
    (8, "variation of constants", manufactured),
    (9, "matching engine", matching),
    (10, "asymptotics for 2k >= n", asymptotics),
]


def run_one(number: int, quick: bool = False, tol: Tolerances = Tolerances()) -> CriterionResult:
    _, name, fn = CRITERIA[number - 1]
    t0 = time.perf_counter()
    try:
        ok, detail = fn(quick=quick, tol=tol)
    except Exception as err:  # a crash is a failed criterion, reported as such
        ok, detail = False, f"{type(err).__name__}: {err}"
    return CriterionResult(number, name, bool(ok), detail, time.perf_counter() - t0)


def run_all(quick: bool = False, tol: Tolerances = Tolerances(), echo: Callable | None = None) -> list[CriterionResult]:
    out = []
    for number, _, _ in CRITERIA:
        r = run_one(number, quick, tol)
        if echo is not None:
            echo(format_line(r))
        out.append(r)
    return out
