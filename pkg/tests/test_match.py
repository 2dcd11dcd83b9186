import math

import numpy as np
import pytest

from syl import presets
from syl.core import Params
from syl.errors import InadmissibleInput
from syl.match import _cauchy, _e2_of, integrability
from syl.radial import build_orbit, hstar


@pytest.fixture(scope="module")
def unperturbed():
    exp = presets.sigma(5, 2, 0.3, e1_scale=0.0, shift=1.0)
    return exp, presets.run(exp)


@pytest.fixture(scope="module")
def forced():
    exp = presets.sigma(5, 2, 0.3, e1_scale=0.1, e1_rate=1.0)
    return exp, presets.run(exp)


def test_unperturbed_trajectory_is_shifted_orbit(unperturbed):
    exp, _ = unperturbed
    o = build_orbit(Params(5, 2), 0.3, (0.0, 30.0))
    t = np.linspace(1.0, 25.0, 401)
    b, db = exp.traj(t)
    xi, s = o.state(t - 1.0)
    assert np.max(np.abs(b - xi)) <= 1e-9
    assert np.max(np.abs(db - s)) <= 1e-9


def test_unperturbed_critical_points_are_periodic(unperturbed):
    exp, (res, chk, err) = unperturbed
    assert err is None
    j = np.arange(res.tau.size)
    assert np.max(np.abs(res.tau - res.tau[0] - j * res.T)) <= 1e-8
    assert res.T == pytest.approx(exp.meta["T_h"], rel=1e-10)
    assert res.s_inf == pytest.approx(1.0, abs=1e-8)
    assert chk.ok


@pytest.mark.parametrize("shift", [0.4, 2.5])
def test_recovered_shift(shift):
    exp = presets.sigma(5, 2, 0.3, e1_scale=0.0, shift=shift)
    res, chk, _ = presets.run(exp)
    assert math.remainder(res.s_inf - exp.meta["expected_shift"], res.T) == pytest.approx(0.0, abs=1e-8)


def test_k1_cross_representation():
    n = 4
    h = 0.3 * hstar(Params(n, 1))
    exp = presets.k1(n, h, e1_scale=0.0, shift=1.0)
    res, chk, err = presets.run(exp)
    assert err is None and chk.ok
    assert exp.meta["D_inf"] == pytest.approx(exp.meta["D_h"], rel=1e-9)
    assert math.remainder(res.s_inf - exp.meta["expected_shift"], res.T) == pytest.approx(0.0, abs=1e-7)


def test_k1_forced_level_in_range():
    n = 4
    exp = presets.k1(n, 0.3 * hstar(Params(n, 1)))
    res, chk, err = presets.run(exp)
    assert exp.meta["Dstar"] < exp.meta["D_inf"] < 0
    assert err is None and chk.ok


def test_forced_sigma_envelope(forced):
    exp, (res, chk, err) = forced
    assert err is None
    assert chk.ok and chk.integrable
    assert 0 < chk.C_fit <= 1e3
    assert chk.rate > 0.5
    assert np.all(res.near_min[2:])
    rep = presets.report(exp, res, chk, err)
    assert rep["ok"] is True and rep["near_min_ok"] is True


def test_scaling_coherence(forced):
    _, (_, chk_a, _) = forced
    exp_b = presets.sigma(5, 2, 0.3, e1_scale=0.05, e1_rate=1.0)
    _, chk_b, _ = presets.run(exp_b)
    ratio = chk_a.C_fit / chk_b.C_fit
    assert 1 / 3 <= ratio <= 3


def test_constant_case():
    exp = presets.constant(5, 2)
    res, chk, err = presets.run(exp)
    assert err is None
    assert res.case1_ok
    assert presets.report(exp, res, chk, err)["ok"]


def test_adversarial_is_flagged():
    exp = presets.adversarial()
    res, chk, err = presets.run(exp)
    rep = presets.report(exp, res, chk, err)
    assert rep["ok"] is False
    ok, _ = integrability(exp.problem, _e2_of(exp.problem, exp.traj), exp.traj.span[1])
    assert not ok


def test_integrable_forcing(forced):
    exp, _ = forced
    ok, _ = integrability(exp.problem, _e2_of(exp.problem, exp.traj), exp.traj.span[1])
    assert ok


def test_short_trajectory_fails_cleanly():
    exp = presets.sigma(5, 2, 0.3, e1_scale=0.0, periods=2)
    res, chk, err = presets.run(exp)
    assert res is None and "critical points" in err
    assert presets.report(exp, res, chk, err)["ok"] is False


def test_cauchy_rule():
    ok, tail = _cauchy(0.1 * 0.5 ** np.arange(12))
    assert ok and tail == pytest.approx(0.1 * 0.5**11, rel=1e-12)
    assert not _cauchy(np.full(12, 0.1))[0]
    assert _cauchy(np.array([1e-3, 1e-12]))[0]


def test_preset_input_checks():
    with pytest.raises(InadmissibleInput):
        presets.sigma(5, 2, 0.9)
    with pytest.raises(InadmissibleInput):
        presets.sigma(4, 2, 0.3)
    with pytest.raises(InadmissibleInput):
        presets.constant(4, 2)
