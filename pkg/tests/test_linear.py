import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from syl.core import Params, RadialState
from syl.errors import InadmissibleInput
from syl.linear import (
    ModeLabel,
    ModeSpec,
    c_bound,
    coeffs,
    decay_rate,
    discriminant,
    floquet_pair,
    liouville,
    max_e,
    mode_for,
    mode_residual,
    monodromy,
    monodromy_batch,
    translational_pair,
    vc_solve,
    wronskian_weight,
    zero_mode_frequency,
    zero_mode_pair,
    zero_plus,
)
from syl.radial import build_orbit, hstar, rhs

P52 = Params(5, 2)


@pytest.fixture(scope="module")
def orb():
    return build_orbit(P52, 0.3, (0.0, 40.0))


def test_mode_labels():
    assert mode_for(P52, 0).label is ModeLabel.ZERO
    assert mode_for(P52, 4).label is ModeLabel.TRANSLATIONAL
    assert mode_for(P52, 10).label is ModeLabel.HIGHER
    with pytest.raises(InadmissibleInput):
        mode_for(P52, 6)
    with pytest.raises(InadmissibleInput):
        ModeSpec(10.0, ModeLabel.TRANSLATIONAL).check(P52)


def test_coefficients_against_pointwise_rhs(orb):
    lc = coeffs(orb)
    for t in np.linspace(0, 10, 23):
        xi, s, xtt, _, q, S = orb.derivatives(t)
        assert xtt == pytest.approx(rhs(P52, RadialState(float(xi), float(s))), abs=1e-9)
        assert lc.A(t) == pytest.approx(0.5 * (1 - s * s), rel=1e-14)
        ca = ((P52.k - 1) * xtt + (P52.n - 2 * P52.k + 1) * 0.5 * q) / ((P52.n - 1) * 0.5 * q)
        assert lc.C_over_A(t) == pytest.approx(ca, rel=1e-12)


def test_explicit_kernels_solve_their_modes(orb):
    t = np.linspace(0, 15, 601)
    r0 = mode_residual(orb, mode_for(P52, 0), zero_plus(orb))(t)
    assert np.max(np.abs(r0)) <= 1e-8
    pair = translational_pair(orb)
    m = mode_for(P52, 4)
    rm = mode_residual(orb, m, pair.phi_minus)(t)
    rp = mode_residual(orb, m, pair.phi_plus)(t)
    assert np.max(np.abs(rm)) <= 1e-8
    # e^t basis: rounding grows like e^t, so compare after weighting
    assert np.max(np.abs(rp * np.exp(-t))) <= 1e-8


def test_h_derivative_against_finite_difference(orb):
    zp = zero_mode_pair(orb, t_end=20.0)
    d = 1e-6
    a = build_orbit(P52, 0.3 + d, (0.0, 20.0))
    b = build_orbit(P52, 0.3 - d, (0.0, 20.0))
    t = np.linspace(0, 20, 201)
    fd = (a.state(t)[0] - b.state(t)[0]) / (2 * d)
    got = zp.phi_minus(t)[0]
    assert np.max(np.abs(got - fd)) <= 1e-5 * max(1.0, np.max(np.abs(fd)))
    res = mode_residual(orb, mode_for(P52, 0), zp.phi_minus)(t)
    assert np.max(np.abs(res)) <= 1e-7


def test_wronskian_closed_form(orb):
    t = np.linspace(0, 12, 241)
    for pair in (translational_pair(orb), zero_mode_pair(orb, t_end=12.0)):
        w = pair.W(t) * wronskian_weight(orb, t)
        assert np.max(np.abs(w - w[0])) <= 1e-7 * abs(w[0])


@pytest.mark.parametrize("nk,h", [((5, 2), 0.3), ((7, 3), 0.4), ((6, 1), 0.1)])
def test_liouville_normal_form(nk, h):
    # V L[V^{-1} psi] = psi'' + E psi, checked with psi = sin t by finite differences
    p = Params(*nk)
    o = build_orbit(p, h)
    m = mode_for(p, 2 * p.n)
    V, E = liouville(o, m)
    lc = coeffs(o)
    t = np.linspace(1.0, 8.0, 71)
    d = 1e-3
    u = lambda s: np.sin(s) / V(s)
    u0, up, um = u(t), u(t + d), u(t - d)
    u1 = (up - um) / (2 * d)
    u2 = (up - 2 * u0 + um) / (d * d)
    lhs = V(t) * (u2 + lc.B_over_A(t) * u1 + lc.potential(t, m.lambda_j) * u0)
    rhs_ = -np.sin(t) + E(t) * np.sin(t)
    assert np.max(np.abs(lhs - rhs_)) <= 1e-4


def test_discriminant_examples():
    assert discriminant(P52) == -4
    assert discriminant(Params(9, 4)) == 152
    assert c_bound(P52) == 3.0
    assert c_bound(Params(9, 4)) == 2.0 + 2.0 / 8


@pytest.mark.parametrize("nk", [(5, 2), (7, 2), (9, 4), (6, 1)])
@pytest.mark.parametrize("frac", [0.1, 0.5, 0.9])
def test_e_bound(nk, frac):
    p = Params(*nk)
    o = build_orbit(p, frac * hstar(p))
    for lam in (2 * p.n, 3 * p.n):
        assert max_e(o, mode_for(p, lam)) <= -c_bound(p) + 1e-9


def test_liouville_rejects_supercritical():
    o = build_orbit(Params(5, 3), 0.2)
    with pytest.raises(InadmissibleInput):
        liouville(o, mode_for(Params(5, 3), 10))


def test_monodromy_examples(orb):
    T = orb.period
    zero, trans, high = monodromy_batch(orb, [0.0, 4.0, 10.0])
    for mono in (zero, trans, high):
        assert mono.det == pytest.approx(1.0, abs=1e-8)
    assert zero.jordan_flag and zero.trace == pytest.approx(2.0, abs=1e-6)
    assert trans.rho == pytest.approx(1.0, abs=1e-8)
    assert trans.trace == pytest.approx(2 * math.cosh(T), rel=1e-8)
    assert high.rho > 1.0


def test_monodromy_batch_matches_single(orb):
    batch = monodromy_batch(orb, [10.0, 15.0])
    single = monodromy(orb, mode_for(P52, 15.0))
    assert single.rho == pytest.approx(batch[1].rho, rel=1e-9)


@settings(max_examples=8)
@given(st.floats(10.0, 40.0), st.floats(0.5, 10.0))
def test_rho_increases_with_lambda(lam, gap):
    o = build_orbit(P52, 0.3)
    a, b = monodromy_batch(o, [lam, lam + gap])
    assert b.rho > a.rho


@pytest.mark.parametrize("nk", [(5, 2), (7, 2), (6, 1)])
def test_zero_mode_frequency(nk):
    p = Params(*nk)
    assert zero_mode_frequency(p) == pytest.approx(math.sqrt(p.n - 2 * p.k), rel=1e-10)


def test_floquet_pair(orb):
    m = mode_for(P52, 10)
    pair, mono = floquet_pair(orb, m)
    t = np.linspace(0, 3 * orb.period, 301)
    rp = mode_residual(orb, m, pair.phi_plus)(t)
    rm = mode_residual(orb, m, pair.phi_minus)(t)
    scale_p = np.abs(pair.phi_plus(t)[0]).max()
    scale_m = np.abs(pair.phi_minus(t)[0]).max()
    assert np.max(np.abs(rp)) <= 1e-7 * scale_p
    assert np.max(np.abs(rm)) <= 1e-7 * scale_m
    # phi_minus decays at the Floquet rate
    tt = np.linspace(0, 4 * orb.period, 4001)
    assert decay_rate(tt, pair.phi_minus(tt)[0], orb.period) == pytest.approx(mono.rho, rel=1e-6)


def test_vc_zero_forcing(orb):
    sol = vc_solve(orb, mode_for(P52, 10), lambda t: 0.0 * t, beta=1.0)
    assert np.max(np.abs(sol.phi)) == 0.0


def _manufactured(orb, lam, beta):
    lc = coeffs(orb)

    def target(t):
        e = np.exp(-beta * t)
        return e, -beta * e, beta * beta * e

    def r(t):
        f0, f1, f2 = target(t)
        return f2 + lc.B_over_A(t) * f1 + lc.potential(t, lam) * f0

    return target, r


@pytest.mark.parametrize("lam,beta", [(4.0, 2.0), (4.0, 0.5), (10.0, 1.5), (10.0, 3.0)])
def test_vc_manufactured(orb, lam, beta):
    # any decaying solution differs from the target by a decaying kernel multiple
    m = mode_for(P52, lam)
    target, r = _manufactured(orb, lam, beta)
    sol = vc_solve(orb, m, r, beta, t_end=10.0)
    diff = sol.phi - target(sol.t)[0]
    c = float(np.dot(diff, sol.kernel) / np.dot(sol.kernel, sol.kernel))
    assert np.max(np.abs(diff - c * sol.kernel)) <= 1e-6


def test_vc_translational_coefficient(orb):
    _, r = _manufactured(orb, 4.0, 2.0)
    sol = vc_solve(orb, mode_for(P52, 4), r, 2.0, t_end=10.0)
    # the remainder decays at the forcing rate, the kernel part at rate 1
    tail = sol.t >= 2.0
    rate = decay_rate(sol.t[tail], sol.remainder[tail])
    assert rate == pytest.approx(2.0, abs=0.05)


def test_vc_zero_mode(orb):
    lam, beta = 0.0, 1.0
    target, r = _manufactured(orb, lam, beta)
    sol = vc_solve(orb, mode_for(P52, 0), r, beta, t_end=10.0)
    diff = sol.phi - target(sol.t)[0]
    assert np.max(np.abs(diff)) <= 1e-6


def test_vc_rejections(orb):
    with pytest.raises(InadmissibleInput):
        vc_solve(orb, mode_for(P52, 4), lambda t: np.exp(-t), beta=1.0)
    with pytest.raises(InadmissibleInput):
        vc_solve(orb, mode_for(P52, 10), lambda t: np.ones_like(t), beta=1.0)
    with pytest.raises(InadmissibleInput):
        vc_solve(orb, mode_for(P52, 10), lambda t: np.exp(-t), beta=0.0)
    with pytest.raises(InadmissibleInput):
        vc_solve(build_orbit(P52, 0.0), mode_for(P52, 10), lambda t: np.exp(-t), beta=1.0)


@pytest.mark.parametrize("nk", [(5, 2), (7, 2), (6, 1), (9, 2)])
def test_sharper_e_bound_nonpositive_discriminant(nk):
    p = Params(*nk)
    assert discriminant(p) <= 0
    for frac in (0.05, 0.5, 0.95):
        o = build_orbit(p, frac * hstar(p))
        assert max_e(o, mode_for(p, 2 * p.n)) <= -(p.n + 2) / 2 + 1e-9


@pytest.mark.parametrize("h", [0.2, 0.5, 0.8])
def test_e_bound_is_attained_when_2k_equals_n(h):
    p = Params(4, 2)
    o = build_orbit(p, h, (0.0, 30.0))
    assert max_e(o, mode_for(p, 8)) == pytest.approx(-c_bound(p), abs=1e-12)


def test_vc_decay_rate_higher_mode(orb):
    beta = 1.3
    m = mode_for(P52, 10)
    sol = vc_solve(orb, m, lambda t: np.exp(-beta * t), beta, t_end=4 * orb.period)
    rho = monodromy(orb, m).rho
    # asymptotic rate: the first period is transient
    sel = sol.t >= orb.period
    assert decay_rate(sol.t[sel], sol.phi[sel], orb.period) >= min(beta, rho) - 0.05


@pytest.mark.parametrize("h", [0.1, 0.3, 0.5])
def test_rho_floor(h):
    o = build_orbit(P52, h)
    monos = monodromy_batch(o, [10.0, 12.0, 15.0])
    assert monos[0].rho >= math.sqrt(2) + 0.01
    for mono in monos:
        assert mono.rho >= math.sqrt(c_bound(P52)) - 1e-6
    assert monos[0].rho < monos[1].rho < monos[2].rho
