import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from syl.core import Direction, Params, RadialState, Regime, convert, gamma_k_plus, schouten_eigs, sigma_j, SchoutenEigs
from syl.errors import InadmissibleInput


def brute_sigma(values, j):
    # e_j from the coefficients of prod (x - v)
    coeffs = np.poly(values)
    return (-1) ** j * coeffs[j]


def test_params_validation():
    assert Params(5, 2).regime is Regime.SUBCRITICAL
    assert Params(4, 2).regime is Regime.CRITICAL
    assert Params(3, 2).regime is Regime.SUPERCRITICAL
    assert Params(5, 2).c_norm == math.comb(5, 2) / 4
    for bad in [(2, 1), (5, 0), (5, 6), (5.5, 2), (True, 1)]:
        with pytest.raises(InadmissibleInput):
            Params(*bad)


def test_zero_state_eigenvalues():
    e = schouten_eigs(Params(5, 2), RadialState(0.0, 0.0), 0.0, 0.0)
    assert (e.lam, e.mu) == (0.5, -1.0)


@pytest.mark.parametrize("t", [0.0, 0.7, 3.0, -2.0])
def test_spherical_orbit_has_mu_zero(t):
    s = RadialState(math.log(math.cosh(t)), math.tanh(t))
    e = schouten_eigs(Params(6, 2), s, 1.0 / math.cosh(t) ** 2, t)
    assert abs(e.mu) <= 1e-12 * math.exp(2 * t)


def test_constant_orbit_eigenvalues():
    n, k, t = 5, 2, 0.4
    e = schouten_eigs(Params(n, k), RadialState(0.402359478108525, 0.0), 0.0, t)
    assert e.lam == pytest.approx(0.5 * math.exp(2 * t), rel=1e-15)
    assert e.mu == pytest.approx(-math.exp(2 * t), rel=1e-15)
    assert n * e.lam + k * e.mu == pytest.approx((n / 2 - k) * math.exp(2 * t))


def test_sigma_j_matches_brute_force():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        n = int(rng.integers(3, 11))
        lam, mu = rng.uniform(-2, 2, size=2)
        e = SchoutenEigs(lam, mu)
        vals = e.multiset(n)
        for j in range(1, n + 1):
            ref = brute_sigma(vals, j)
            got = sigma_j(Params(n, 1), e, j)
            scale = max(abs(ref), math.comb(n, j) * max(abs(lam), abs(lam + mu)) ** j * 1e-3, 1e-300)
            assert abs(got - ref) <= 1e-12 * scale


def test_sigma_j_rejects_out_of_range():
    e = SchoutenEigs(1.0, 0.0)
    with pytest.raises(InadmissibleInput):
        sigma_j(Params(4, 1), e, 0)
    with pytest.raises(InadmissibleInput):
        sigma_j(Params(4, 1), e, 5)


@given(st.integers(3, 10), st.floats(-3, 3), st.floats(-3, 3))
def test_gamma_plus_monotone_in_k(n, lam, mu):
    e = SchoutenEigs(lam, mu)
    flags = [gamma_k_plus(Params(n, k), e) for k in range(1, n + 1)]
    for k in range(1, n):
        if flags[k]:
            assert flags[k - 1]


def test_convert_examples():
    p4 = Params(4, 2)
    assert convert(p4, math.log(math.cosh(0.0)), 0.0, Direction.W_TO_U) == 1.0
    r = 0.3
    t = -math.log(r)
    u = convert(Params(5, 2), 0.0, t, Direction.W_TO_BALL_U)
    assert u == pytest.approx(r ** (-1.5), rel=1e-14)


def test_convert_round_trip():
    rng = np.random.default_rng(1)
    p = Params(7, 3)
    w = rng.uniform(-5, 5, 10_000)
    t = rng.uniform(-5, 5, 10_000)
    for fwd, back in [(Direction.W_TO_U, Direction.U_TO_W), (Direction.W_TO_BALL_U, Direction.BALL_U_TO_W),
                      (Direction.W_TO_V, Direction.V_TO_W)]:
        again = convert(p, convert(p, w, t, fwd), t, back)
        assert np.max(np.abs(again - w)) <= 1e-13 * 10


def test_convert_rejects_nonpositive():
    with pytest.raises(InadmissibleInput):
        convert(Params(5, 2), [1.0, 0.0], 0.0, "U->w")
