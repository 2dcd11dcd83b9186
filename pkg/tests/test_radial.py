import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from syl.core import Params, RadialState, gamma_k_plus, schouten_eigs, sigma_j
from syl.errors import DegenerateSlope, InadmissibleInput
from syl.integrate import Tolerances
from syl.radial import (
    SolutionKind,
    build_orbit,
    canonical_minimum,
    classify,
    correction_exponent,
    cylrad_first_integral,
    cylrad_rhs,
    first_integral,
    hstar,
    integrate_state,
    k1_constants,
    rhs,
    stationary_g,
    xi_minus,
    xi_plus,
    y_star,
)

# extended-precision values of h* and y*
HSTAR = {
    (5, 2): (0.5349922439811376192025865, 0.4023594781085250936501898),
    (6, 2): (0.3849001794597505096727659, 0.2746530721670274228488113),
    (7, 3): (0.6197314511995575225041508, 0.3243183581758855508508921),
    (9, 4): (0.6754094983569711531832780, 0.2746530721670274228488113),
    (3, 1): (0.3849001794597505096727659, 0.5493061443340548456976226),
}
# 40-digit root of e^{-y} - e^{-5y} = 0.3
XI_MINUS_5_2_03 = 0.1007978951921324859774398

subcritical = st.tuples(st.integers(3, 10), st.integers(1, 4)).filter(lambda nk: 2 * nk[1] < nk[0])


@pytest.mark.parametrize("nk", sorted(HSTAR))
def test_hstar_ystar_oracles(nk):
    p = Params(*nk)
    hs, ys = HSTAR[nk]
    assert hstar(p) == pytest.approx(hs, rel=1e-14)
    assert y_star(p) == pytest.approx(ys, rel=1e-14)


def test_xi_minus_oracle():
    assert xi_minus(Params(5, 2), 0.3) == pytest.approx(XI_MINUS_5_2_03, abs=1e-14)


@given(subcritical, st.floats(1e-6, 1 - 1e-6))
def test_stationary_roots_residual(nk, frac):
    p = Params(*nk)
    h = frac * hstar(p)
    lo, hi = xi_minus(p, h), xi_plus(p, h)
    assert 0 <= lo <= y_star(p) <= hi
    assert abs(float(stationary_g(p, lo)) - h) <= 1e-13
    assert abs(float(stationary_g(p, hi)) - h) <= 1e-13


def test_rhs_examples():
    assert rhs(Params(5, 2), RadialState(0.0, 0.0)) == pytest.approx(1.0)
    p = Params(5, 2)
    ys = y_star(p)
    assert rhs(p, RadialState(ys, 0.0)) == pytest.approx(0.0, abs=1e-15)
    with pytest.raises(DegenerateSlope):
        rhs(p, RadialState(0.0, 1.0))
    with pytest.raises(InadmissibleInput):
        rhs(p, RadialState(0.0, 1.5))
    # k = 1 has no singular slope
    assert math.isfinite(rhs(Params(5, 1), RadialState(0.0, 1.0)))


def test_classify_examples():
    assert classify(Params(5, 2), 0.0).kind is SolutionKind.SPHERICAL
    assert classify(Params(5, 2), 0.3).kind is SolutionKind.PERIODIC
    assert classify(Params(5, 2), hstar(Params(5, 2))).kind is SolutionKind.CYLINDER_CONSTANT
    c = classify(Params(4, 2), 0.25)
    assert c.kind is SolutionKind.CONE_LIKE and c.exponent == pytest.approx(math.sqrt(0.5))
    c = classify(Params(5, 3), 0.4)
    assert c.kind is SolutionKind.FINITE_LIMIT and c.exponent == pytest.approx(2 - 5 / 3)
    for bad in [(Params(5, 2), 0.9), (Params(5, 2), -0.1), (Params(4, 2), 1.0), (Params(5, 2), math.nan)]:
        with pytest.raises(InadmissibleInput):
            classify(*bad)


def test_spherical_orbit_is_logcosh():
    o = build_orbit(Params(5, 2), 0.0, (-20.0, 20.0))
    t = np.linspace(-20, 20, 2001)
    xi, _ = o.state(t)
    assert np.max(np.abs(xi - np.log(np.cosh(t)))) <= 1e-8


@pytest.mark.parametrize("nk,h", [((5, 2), 0.3), ((7, 3), 0.5), ((4, 2), 0.3), ((5, 3), 0.2), ((6, 1), 0.1)])
def test_reversible_and_conserved(nk, h):
    p = Params(*nk)
    o = build_orbit(p, h, (-10.0, 10.0))
    t = np.linspace(0, 10, 401)
    xi_f, s_f = o.state(t)
    xi_b, s_b = o.state(-t)
    assert np.max(np.abs(xi_f - xi_b)) <= 1e-8
    assert np.max(np.abs(s_f + s_b)) <= 1e-8
    assert o.stats.max_drift <= 1e-8


@pytest.mark.parametrize("h", [0.05, 0.3, 0.5])
def test_periodic_range_and_admissibility(h):
    p = Params(5, 2)
    o = build_orbit(p, h)
    t = np.linspace(0, 2 * o.period, 4001)
    xi = o.state(t)[0]
    assert np.min(xi) == pytest.approx(xi_minus(p, h), abs=1e-9)
    assert np.max(xi) == pytest.approx(xi_plus(p, h), abs=1e-9)
    for tt in t[::200]:
        x, s, xtt, *_ = o.derivatives(tt)
        e = schouten_eigs(p, RadialState(float(x), float(s)), float(xtt), float(tt))
        assert gamma_k_plus(p, e)
        # the orbit solves sigma_k = const in the conformal normalisation
        lhs = sigma_j(p, e, p.k) * math.exp(-2 * p.k * tt)
        assert lhs == pytest.approx(p.c_norm * math.exp(-2 * p.k * float(x)), rel=1e-8)


def test_conservation_against_tighter_run():
    p = Params(7, 3)
    a = build_orbit(p, 0.4)
    b = build_orbit(p, 0.4, tol=Tolerances(1e-11, 1e-13))
    t = np.linspace(0, 20, 501)
    assert np.max(np.abs(a.state(t)[0] - b.state(t)[0])) <= 1e-7


@pytest.mark.parametrize("nk", [(5, 2), (7, 2), (9, 4)])
def test_period_near_cylinder(nk):
    p = Params(*nk)
    o = build_orbit(p, hstar(p) * (1 - 1e-6))
    assert o.period == pytest.approx(2 * math.pi / math.sqrt(p.n - 2 * p.k), rel=1e-4)


def test_period_decreases_towards_cylinder():
    # observed baseline on one grid, not a general claim
    p = Params(5, 2)
    hs = np.linspace(0.05, 0.95, 7) * hstar(p)
    T = [build_orbit(p, h).period for h in hs]
    assert all(a > b for a, b in zip(T, T[1:]))


def test_translation_invariance():
    p = Params(5, 2)
    o = build_orbit(p, 0.3)
    t0 = 1.3
    x0, s0 = o.state(t0)
    shifted = integrate_state(p, RadialState(float(x0), float(s0)), (0.0, 20.0))
    t = np.linspace(0, 10, 201)
    assert np.max(np.abs(shifted.state(t)[0] - o.state(t + t0)[0])) <= 1e-8
    assert shifted.h == pytest.approx(0.3, rel=1e-10)
    assert shifted.period == pytest.approx(o.period, rel=1e-9)


def test_cone_like_exponent():
    p = Params(4, 2)
    o = build_orbit(p, 0.25, (0.0, 40.0))
    alpha, _ = correction_exponent(o)
    assert alpha > 0


def test_canonical_minimum_critical_closed_form():
    assert canonical_minimum(Params(4, 2), 0.5) == pytest.approx(math.log(2) / 4)


def test_k1_constants():
    c = k1_constants(5)
    assert c.eps0 == pytest.approx((3 / 5) ** 0.75)
    assert c.Dstar == pytest.approx(-1.5 * 0.6**2.5)
    with pytest.raises(InadmissibleInput):
        k1_constants(2)


def test_k1_orbit_matches_scalar_equation():
    n, h = 5, 0.1
    p = Params(n, 1)
    o = build_orbit(p, h)
    t = np.linspace(0, 15, 301)
    xi, s, xtt, *_ = o.derivatives(t)
    psi = np.exp(-(n - 2) * xi / 2)
    psi_t = -(n - 2) / 2 * s * psi
    psi_tt = psi * ((n - 2) ** 2 / 4 * s**2 - (n - 2) / 2 * xtt)
    assert np.max(np.abs(psi_tt - cylrad_rhs(n, psi))) <= 1e-9
    D = cylrad_first_integral(n, psi, psi_t)
    assert np.max(np.abs(D + (n - 2) ** 2 / 4 * h)) <= 1e-10


def test_first_integral_at_rest():
    p = Params(5, 2)
    assert first_integral(p, RadialState(0.2, 0.0)) == pytest.approx(float(stationary_g(p, 0.2)))
