import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from cdcp import distributions as dist
from cdcp.distributions import Exponential, Gamma
from cdcp.errors import ConfigInvalid, DivergentTransform, InvalidTilt


def upper(rate, shape=3.0):
    # tail mass of the (tilted) law beyond this point is far below 1e-12
    return (80.0 + 10.0 * shape) / rate


def quad_mean(d):
    return quad(lambda x: x * d.pdf(x), 0, upper(d.rate, d.shape), epsabs=1e-13, epsrel=1e-12, limit=200)[0]


def quad_laplace(d, s):
    f = lambda x: np.exp(-s * x) * d.pdf(x)
    return quad(f, 0, upper(d.rate + s, d.shape), epsabs=1e-13, epsrel=1e-12, limit=200)[0]


def test_means():
    assert dist.mean(Exponential(2.0)) == 0.5
    assert dist.mean(Gamma(0.4, 3.0)) == pytest.approx(quad_mean(Gamma(0.4, 3.0)), rel=1e-9)
    assert dist.mean(Gamma(0.4, 3.0)) == pytest.approx(7.5, rel=1e-14)
    assert dist.mean(Gamma(0.35, 3.0)) == pytest.approx(quad_mean(Gamma(0.35, 3.0)), rel=1e-9)
    assert dist.mean(Gamma(0.35, 3.0)) == pytest.approx(60 / 7, rel=1e-14)


@pytest.mark.parametrize("d", [Exponential(2.0), Exponential(0.7), Gamma(0.4, 3.0), Gamma(1.3, 2.5)])
def test_density_has_unit_mass(d):
    assert quad(d.pdf, 0, np.inf, epsabs=1e-13)[0] == pytest.approx(1.0, abs=1e-8)


def test_laplace_values():
    assert dist.laplace(Exponential(2.0), 0.0) == 1.0
    assert dist.laplace(Gamma(0.4, 3.0), 0.0) == 1.0
    assert dist.laplace(Exponential(2.0), 1.0) == pytest.approx(quad_laplace(Exponential(2.0), 1.0), rel=1e-10)
    assert dist.laplace(Exponential(2.0), 1.0) == pytest.approx(2 / 3, rel=1e-14)
    j = Gamma(0.4, 3.0)
    assert j.laplace(-0.05) == pytest.approx(quad_laplace(j, -0.05), rel=1e-9)
    assert j.laplace(-0.05) == pytest.approx((0.4 / 0.35) ** 3, rel=1e-14)
    assert j.laplace(-0.05) == pytest.approx(1.49271, abs=1e-5)


def test_laplace_diverges_at_the_rate():
    with pytest.raises(DivergentTransform):
        Exponential(2.0).laplace(-2.0)
    with pytest.raises(DivergentTransform):
        Gamma(0.4, 3.0).laplace(np.array([0.0, -0.5]))


@pytest.mark.parametrize("kind,rate,shape", [("exponential", 0.0, 1.0), ("exponential", 1.0, 2.0), ("gamma", 1.0, 0.5), ("beta", 1.0, 1.0)])
def test_invalid_laws(kind, rate, shape):
    with pytest.raises(ConfigInvalid):
        dist.JumpDist(kind, rate, shape)


def test_sampling_means_and_determinism():
    n = 10**6
    for d in (Exponential(2.0), Gamma(0.4, 3.0)):
        x = dist.sample(d, np.random.default_rng(11), n)
        se = x.std(ddof=1) / np.sqrt(n)
        assert abs(x.mean() - d.mean) < 3 * se
    a = dist.sample(Gamma(0.4, 3.0), np.random.default_rng(5), 1000)
    b = dist.sample(Gamma(0.4, 3.0), np.random.default_rng(5), 1000)
    assert np.array_equal(a, b)


def test_claim_tilt():
    j = Gamma(0.4, 3.0)
    assert dist.tilt_claim(j, 0.0) == j
    tilted = dist.tilt_claim(j, -0.05)
    assert (tilted.kind, tilted.shape) == ("gamma", 3.0)
    assert tilted.rate == pytest.approx(0.35, rel=1e-15)
    for nu in (-0.4, -0.5, 0.1):
        with pytest.raises(InvalidTilt):
            dist.tilt_claim(j, nu)


def test_claim_tilt_matches_normalised_weighting():
    # rate gamma+nu, shape eta: compare with exp(-nu x) j(x) / j_hat(nu) pointwise
    j, nu = Gamma(0.4, 3.0), -0.05
    x = np.linspace(0.01, 80, 400)
    direct = np.exp(-nu * x) * j.pdf(x) / quad_laplace(j, nu)
    np.testing.assert_allclose(dist.tilt_claim(j, nu).pdf(x), direct, rtol=1e-9)


def test_exp_tilt():
    assert dist.exp_tilt(Exponential(2.0), 0.0) == Exponential(2.0)
    tilted = dist.exp_tilt(Exponential(1.0), 0.3)
    assert tilted.rate == pytest.approx(0.7)
    with pytest.raises(InvalidTilt):
        dist.exp_tilt(Exponential(2.0), 2.0)


@pytest.mark.parametrize("d,B", [(Exponential(1.0), 0.3), (Exponential(2.0), -0.4), (Gamma(0.4, 3.0), 0.1)])
def test_exp_tilt_density_is_normalised_product(d, B):
    x = np.linspace(0.0, 30.0, 301)[1:]
    norm = quad_laplace(d, -B)
    np.testing.assert_allclose(dist.exp_tilt(d, B).pdf(x), np.exp(B * x) * d.pdf(x) / norm, rtol=1e-10, atol=1e-10)


def test_scale():
    assert dist.scale(Exponential(2.0), 1.0) == Exponential(2.0)
    assert dist.scale(Exponential(0.7), 2.0).rate == pytest.approx(0.35)
    y = 2.0 * np.random.default_rng(3).exponential(1 / 0.7, 200_000)
    fitted = 1 / y.mean()
    assert fitted == pytest.approx(0.35, rel=3 * 1 / np.sqrt(200_000))
    with pytest.raises(ConfigInvalid):
        dist.scale(Exponential(1.0), 0.0)


def test_scaled_tilted_external_law_rate():
    # (alpha - B) / (theta * j_hat * beta / (beta - B)) at the reference values
    alpha, beta, theta, B = 2.0, 1.0, 1.25, 0.2
    jhat = (1 - 0.05 / 0.4) ** -3
    c = theta * jhat * beta / (beta - B)
    law = dist.scale(dist.exp_tilt(Exponential(alpha), B), c)
    assert law.rate == pytest.approx((alpha - B) / (theta * (1 + -0.05 / 0.4) ** -3 * beta / (beta - B)), rel=1e-14)


def test_from_dict_roundtrip():
    for d in (Exponential(2.0), Gamma(0.4, 3.0)):
        assert dist.from_dict(d.to_dict()) == d
    with pytest.raises(ConfigInvalid):
        dist.from_dict({"rate": 1.0})


rates = st.floats(0.05, 20.0)
shapes = st.floats(1.0, 6.0)


@settings(max_examples=60, deadline=None)
@given(rates, shapes, st.floats(0.01, 0.99), st.floats(0.0, 5.0))
def test_laplace_strictly_decreasing(rate, shape, frac, gap):
    d = Gamma(rate, shape)
    s1 = -frac * rate
    s2 = s1 + gap + 1e-3
    assert d.laplace(s1) > d.laplace(s2)


@settings(max_examples=60, deadline=None)
@given(rates, shapes, st.floats(0.0, 0.999))
def test_tilted_claim_mean_exact(rate, shape, frac):
    nu = -frac * rate
    assert dist.tilt_claim(Gamma(rate, shape), nu).mean == pytest.approx(shape / (rate + nu), rel=1e-15)


@settings(max_examples=30, deadline=None)
@given(rates, shapes)
def test_laplace_at_zero_is_one(rate, shape):
    assert Gamma(rate, shape).laplace(0.0) == 1.0
