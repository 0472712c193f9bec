import math

import numpy as np
import pytest
from conftest import table_model

from cdcp import esscher as es
from cdcp.distributions import Exponential, Gamma
from cdcp.errors import (
    ConfigInvalid,
    DivergentTransform,
    HorizonExceedsRegime,
    InvalidTilt,
    NoPositiveRoot,
    OutOfDomain,
    OutOfHorizon,
    StatisticOverflow,
)
from cdcp.esscher import EsscherParams
from cdcp.simulate import SimPath

E_SMALL_B = EsscherParams(b=1e-6)
IDENTITY = EsscherParams(theta=1.0, psi=1.0, nu=0.0, b=1e-9)


def rk4_oracle(m, e, T, h):
    """Plain RK4 on dB/dt = f1(B) with the public f1."""
    n = int(round(T / h))
    y = e.b
    for _ in range(n):
        k1 = es.f1(y, m, e)
        k2 = es.f1(y + 0.5 * h * k1, m, e)
        k3 = es.f1(y + 0.5 * h * k2, m, e)
        k4 = es.f1(y + h * k3, m, e)
        y += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return y


def test_parameter_validation(model):
    with pytest.raises(ConfigInvalid):
        EsscherParams(theta=0.9)
    with pytest.raises(ConfigInvalid):
        EsscherParams(psi=0.5)
    with pytest.raises(InvalidTilt):
        EsscherParams(nu=0.1)
    with pytest.raises(ConfigInvalid):
        EsscherParams(b=0.0)
    with pytest.raises(InvalidTilt):
        EsscherParams(nu=-0.4).excitation(model)
    with pytest.raises(ConfigInvalid):
        table_model(delta=0.0)


def test_phi_recomputed(model):
    for theta in (1.0, 1.25, 1.75):
        e = EsscherParams(theta=theta)
        assert e.phi(model) == pytest.approx(-(theta * (0.4 / 0.35) ** 3 - 1), rel=1e-14)


def test_kappa_and_stationarity(model):
    assert model.kappa == 2.0 and model.stationary
    assert not table_model(delta=1.0).stationary


def test_f1_values(model, esscher):
    assert es.f1(0.0, model, esscher) == 0.0
    h = 1e-6
    slope = (es.f1(h, model, esscher) - es.f1(-h, model, esscher)) / (2 * h)
    assert slope == pytest.approx(3 - 1.25 * (0.4 / 0.35) ** 3, rel=1e-8)
    with pytest.raises(DivergentTransform):
        es.f1(1.0, model, esscher)


def test_b_plus(model, esscher):
    closed = es.b_plus(model, esscher)
    assert closed == pytest.approx(1 - 1.25 * (0.4 / 0.35) ** 3 / 3, rel=1e-14)
    assert closed == pytest.approx(0.37804, abs=1e-5)
    assert abs(closed - es.b_plus_bisect(model, esscher)) < 1e-10
    assert es.f1(closed, model, esscher) == pytest.approx(0.0, abs=1e-14)
    assert es.b_plus(model, EsscherParams(theta=1.0, nu=0.0)) == pytest.approx(2 / 3, rel=1e-14)


def test_b_plus_bisection_for_gamma_self_jumps(esscher):
    m = table_model(G=Gamma(2.0, 2.0))
    root = es.b_plus(m, esscher)
    assert es.f1(root, m, esscher) == pytest.approx(0.0, abs=1e-10)
    assert 0 < root < 2.0


def test_no_positive_root():
    k = 1.25 * Gamma(0.4, 3.0).laplace(-0.05)
    m = table_model(delta=k)  # delta * beta == theta * j_hat exactly
    with pytest.raises(NoPositiveRoot):
        es.b_plus(m, EsscherParams())
    with pytest.raises(NoPositiveRoot):
        es.solve_B(m, EsscherParams(), 1.0)


def test_g_of_B_basics(model, esscher):
    assert es.g_of_B(esscher.b, model, esscher) == 0.0
    assert es.g_of_B(0.2, model, esscher) == pytest.approx(es.g_of_B_exponential(0.2, model, esscher), rel=1e-10)
    bp = es.b_plus(model, esscher)
    assert es.g_of_B(bp * (1 - 1e-9), model, esscher) > 5.0
    with pytest.raises(OutOfDomain):
        es.g_of_B(esscher.b / 2, model, esscher)
    with pytest.raises(OutOfDomain):
        es.g_of_B(bp, model, esscher)


@pytest.mark.parametrize("e", [EsscherParams(), E_SMALL_B])
def test_inverse_identity(model, e):
    bc = es.solve_B(model, e, 1.0)
    for t in (0.1, 0.5, 1.0):
        assert es.g_of_B(bc(t), model, e) == pytest.approx(t, abs=1e-6)
    full = es.g_of_B_exponential(bc.values, model, e)
    assert np.max(np.abs(full - bc.grid)) < 1e-6


def test_solve_B_against_independent_rk4(model):
    bc = es.solve_B(model, E_SMALL_B, 1.0)
    assert bc(0.0) == E_SMALL_B.b
    oracle = rk4_oracle(model, E_SMALL_B, 1.0, 1e-4)
    assert 0 < bc(1.0) < 0.37804
    assert bc(1.0) == pytest.approx(oracle, abs=1e-6)


def test_bcurve_monotone_and_bounded(bcurve):
    assert np.all(np.diff(bcurve.values) > 0)
    assert bcurve.values[0] == bcurve.b
    assert np.all(bcurve.values < bcurve.b_plus)


def test_bcurve_long_horizon_approaches_b_plus(model, esscher):
    bc = es.solve_B(model, esscher, 20.0)
    assert bc(20.0) == pytest.approx(bc.b_plus, abs=1e-9)
    assert np.all(np.diff(bc.values) >= 0)


def test_identity_tilt_keeps_B_at_zero(model):
    bc = es.solve_B(model, IDENTITY, 1.0)
    assert np.max(np.abs(bc.values)) < 1e-8
    assert bc.b_plus == pytest.approx(2 / 3)


def test_bcurve_interpolation_and_upto(bcurve):
    with pytest.raises(OutOfHorizon):
        bcurve(1.5)
    s, B = bcurve.upto(0.5)
    assert s[-1] == 0.5 and B[-1] == bcurve(0.5)
    s, B = bcurve.upto(0.33333)
    assert s[-1] == 0.33333
    assert np.allclose(np.diff(s), s[1] - s[0])
    assert B[-1] == pytest.approx(bcurve(0.33333), abs=1e-9)


def test_bcurve_csv(bcurve, kcurve):
    text = bcurve.to_csv(kcurve)
    lines = text.splitlines()
    assert lines[0] == "t,B,K"
    assert len(lines) == bcurve.grid.size + 1
    assert lines[1] == "0,0.01,0"


def test_regimes(model):
    bc = es.solve_B(model, E_SMALL_B, 1.0)
    assert es.classify_regime(model, E_SMALL_B, bc).kind == 1
    assert str(bc.regime) == "Type1"

    m2 = table_model(H=Exponential(0.2))
    bc2 = es.solve_B(m2, E_SMALL_B, 1.0)
    reg = es.classify_regime(m2, E_SMALL_B, bc2)
    assert reg.kind == 2
    assert reg.t_star == pytest.approx(es.g_of_B_exponential(0.2, m2, E_SMALL_B), rel=1e-10)
    assert str(reg).startswith("Type2(t_star=")

    m3 = table_model(H=Exponential(E_SMALL_B.b / 2))
    bc3 = es.solve_B(m3, E_SMALL_B, 1.0)
    assert es.classify_regime(m3, E_SMALL_B, bc3).kind == 3
    with pytest.raises(HorizonExceedsRegime):
        es.tilt_model(m3, E_SMALL_B, bc3)


def test_type2_horizon_guard(model):
    m2 = table_model(H=Exponential(0.2))
    t_star = es.classify_regime(m2, E_SMALL_B, es.solve_B(m2, E_SMALL_B, 1.0)).t_star
    inside = es.solve_B(m2, E_SMALL_B, 0.9 * t_star)
    tm = es.tilt_model(m2, E_SMALL_B, inside)
    assert tm.bcurve.values.max() < 0.2
    beyond = es.solve_B(m2, E_SMALL_B, 1.1 * t_star)
    with pytest.raises(HorizonExceedsRegime):
        es.tilt_model(m2, E_SMALL_B, beyond)
    with pytest.raises(DivergentTransform):
        es.solve_K(m2, E_SMALL_B, beyond)


def test_K_curve(model, esscher, bcurve, kcurve):
    assert kcurve(0.0) == 0.0
    assert np.all(np.diff(kcurve.values) <= 0)
    # trapezoid over a grid twice as fine, built from its own B solve
    fine = es.solve_B(model, esscher, 1.0, n_grid=2 * (bcurve.grid.size - 1))
    B = fine.values
    f = -model.a * model.delta * B + model.rho * (1 - esscher.psi * model.H.laplace(-B))
    trap = float(np.sum(0.5 * (f[1:] + f[:-1])) * fine.step)
    assert kcurve(1.0) == pytest.approx(trap, abs=1e-6)


def test_K_vanishes_for_identity_tilt():
    m = table_model(a=0.0)
    bc = es.solve_B(m, IDENTITY, 1.0)
    assert np.max(np.abs(es.solve_K(m, IDENTITY, bc).values)) < 1e-7


def test_tilted_rates(model):
    bc = es.solve_B(model, E_SMALL_B, 1.0)
    tm = es.tilt_model(model, E_SMALL_B, bc)
    assert tm.external_rate(0.0) == pytest.approx(1.25 * 2 / (2 - 1e-6) * 4, rel=1e-12)
    assert tm.external_rate(0.0) == pytest.approx(5.0, abs=1e-5)
    assert tm.claims.rate == pytest.approx(0.35) and tm.claims.shape == 3.0
    assert tm.claims.mean == pytest.approx(60 / 7, rel=1e-12)
    grid = bc.grid
    assert np.all(np.diff(tm.rate_multiplier(grid)) >= 0)
    assert np.all(np.diff(tm.external_rate(grid)) >= 0)


def test_tilted_representations(tilted, model, esscher):
    t = 0.7
    B = tilted.B(t)
    c = tilted.rate_multiplier(t)
    assert c == pytest.approx(esscher.excitation(model) * 1 / (1 - B))
    assert tilted.level(t) == pytest.approx(c * model.a)
    assert tilted.event_multiplier(t) == 1.0
    assert tilted.self_jumps(t).rate == pytest.approx((1 - B) / c)
    assert tilted.external_jumps(t).rate == pytest.approx((2 - B) / c)
    assert tilted.lambda_g(t) == pytest.approx((1 - B) / c)
    assert tilted.lambda_h(t) == pytest.approx((2 - B) / c)
    lam = es.tilt_model(model, esscher, tilted.bcurve, es.LAMBDA)
    assert lam.level(t) == model.a
    assert lam.event_multiplier(t) == pytest.approx(c)
    assert lam.self_jumps(t).rate == pytest.approx(1 - B)
    assert lam.external_jumps(t).rate == pytest.approx(2 - B)
    with pytest.raises(ConfigInvalid):
        es.tilt_model(model, esscher, tilted.bcurve, "mu")


def test_identity_tilt_reproduces_physical_model(model):
    bc = es.solve_B(model, IDENTITY, 1.0)
    grid = bc.grid
    for rep in (es.LAMBDA, es.LAMBDA_TILDE):
        tm = es.tilt_model(model, IDENTITY, bc, rep)
        np.testing.assert_allclose(tm.rate_multiplier(grid), 1.0, atol=1e-8)
        np.testing.assert_allclose(tm.external_rate(grid), model.rho, atol=1e-7)
        np.testing.assert_allclose(tm.level(grid), model.a, atol=1e-8)
        assert tm.self_jumps(1.0).rate == pytest.approx(model.G.rate, abs=1e-7)
        assert tm.external_jumps(1.0).rate == pytest.approx(model.H.rate, abs=1e-7)
        assert tm.claims == model.J


def test_tilt_needs_exponential_marks(esscher):
    m = table_model(G=Gamma(2.0, 2.0))
    with pytest.raises(ConfigInvalid):
        es.tilt_model(m, esscher, es.solve_B(m, esscher, 1.0))


def test_stationarity_report(tilted):
    rep = tilted.stationarity()
    assert rep["full"] and rep["at_zero"] and rep["as_displayed"]
    assert rep["full_bound"] >= rep["at_zero_bound"]
    assert rep["full_bound"] > rep["as_displayed_bound"]


def _path(self_times=(), self_marks=(), claims=(), ext_times=(), ext_marks=(), lambda0=1.0, a=1.0):
    arr = lambda x: np.asarray(x, dtype=float)
    return SimPath(1.0, lambda0, 3.0, arr(ext_times), arr(ext_marks), arr(self_times), arr(self_marks), arr(claims), a)


def test_martingale_statistic_at_zero(bcurve, kcurve, esscher):
    p = _path([0.3], [0.7], [5.0], [0.5], [0.2])
    assert es.martingale_statistic(p, bcurve, kcurve, esscher, 0.0) == pytest.approx(math.exp(esscher.b * 1.0))


def test_martingale_statistic_single_self_event(bcurve, kcurve, esscher):
    p = _path([0.3], [0.7], [5.0])
    t = 0.8
    lam = 1.0 + 0.7 * math.exp(-3 * 0.5)
    Lam = t + 0.7 * (1 - math.exp(-3 * 0.5)) / 3
    expected = (
        math.exp(kcurve(t)) * esscher.theta * math.exp(bcurve(t) * lam)
        * math.exp(-esscher.nu * 5.0) * math.exp(bcurve.phi * Lam)
    )
    assert es.martingale_statistic(p, bcurve, kcurve, esscher, t) == pytest.approx(expected, rel=1e-12)
    vec = es.martingale_statistic(p, bcurve, kcurve, esscher, np.array([0.0, t]))
    assert vec[1] == pytest.approx(expected, rel=1e-12)


def test_martingale_statistic_overflow(bcurve, kcurve, esscher):
    p = _path([0.1] * 2000, [1.0] * 2000, [500.0] * 2000)
    with pytest.raises(StatisticOverflow):
        es.martingale_statistic(p, bcurve, kcurve, esscher, 1.0)
    assert es.log_martingale_statistic(p, bcurve, kcurve, esscher, 1.0) > 709
