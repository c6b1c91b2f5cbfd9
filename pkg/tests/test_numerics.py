import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, special

from cogrelay.errors import DivergentIntegralError, DomainError, QuadratureFailure
from cogrelay.numerics import (
    QuadratureSpec,
    TailMap,
    gamma_ratio,
    inc_bessel_k,
    inc_bessel_k_batch,
    integrate_1d,
    integrate_2d_region,
    integrate_batch,
    lower_inc_gamma,
    power_exp_integral,
    upper_inc_gamma,
)

from .conftest import ORACLES


@pytest.mark.parametrize("key,value", sorted(ORACLES["lower_gamma"].items()))
def test_lower_gamma_frozen(key, value):
    a, b = map(float, key.split("_"))
    assert lower_inc_gamma(a, b) == pytest.approx(value, rel=1e-12)


def test_gamma_edges():
    assert lower_inc_gamma(2.0, 0.0) == 0.0
    assert upper_inc_gamma(2.0, math.inf) == 0.0
    assert gamma_ratio(3.0, 0.0) == pytest.approx(1 / 3)
    assert upper_inc_gamma(1.0, 2.0) == pytest.approx(math.exp(-2.0))
    with pytest.raises(DomainError):
        lower_inc_gamma(0.0, 1.0)
    with pytest.raises(DomainError):
        upper_inc_gamma(1.0, -1.0)


@settings(max_examples=200, deadline=None)
@given(a=st.floats(0.05, 30.0), b=st.floats(0.0, 80.0))
def test_gamma_complement(a, b):
    total = lower_inc_gamma(a, b) + upper_inc_gamma(a, b)
    assert total == pytest.approx(math.gamma(a), rel=1e-10)


@settings(max_examples=100, deadline=None)
@given(a=st.integers(1, 12), b=st.floats(1e-6, 60.0))
def test_integer_order_matches_scipy(a, b):
    ref = special.gammaincc(a, b) * math.gamma(a)
    assert upper_inc_gamma(a, b) == pytest.approx(ref, rel=1e-11, abs=1e-300)


@pytest.mark.parametrize("a", [1, 2, 3, 5])
@pytest.mark.parametrize("rate", [-50.0, -3.0, -1e-9, 0.0, 1e-9, 0.7, 40.0])
def test_power_exp_integral(a, rate):
    upper = 1.3
    ref = integrate.quad(lambda u: u ** (a - 1) * math.exp(-rate * u), 0, upper, epsrel=1e-13)[0]
    assert power_exp_integral(a, rate, upper) == pytest.approx(ref, rel=1e-10)


def test_power_exp_integral_log_scale():
    # exp(-60) * int_0^1 exp(55 u) du stays finite and accurate
    ref = math.exp(-60) * math.expm1(55) / 55
    assert power_exp_integral(1, -55.0, 1.0, log_scale=-60.0) == pytest.approx(ref, rel=1e-12)
    with pytest.raises(DomainError):
        power_exp_integral(2.5, -1.0, 1.0)


@pytest.mark.parametrize(
    "f,lo,hi,exact",
    [
        (lambda x: np.exp(-x), 0.0, math.inf, 1.0),
        (lambda x: x, 0.0, 1.0, 0.5),
        (lambda x: 1.0 / (1.0 + x * x), 0.0, math.inf, math.pi / 2),
        (lambda x: np.sqrt(x), 0.0, 1.0, 2 / 3),
        (lambda x: np.cos(x), 0.0, math.pi / 2, 1.0),
    ],
)
def test_integrate_1d(f, lo, hi, exact):
    v, err = integrate_1d(f, lo, hi)
    assert v == pytest.approx(exact, rel=1e-9)
    assert err < 1e-6


def test_integrate_1d_orientation_and_linear_tail():
    assert integrate_1d(lambda x: x, 1.0, 0.0)[0] == pytest.approx(-0.5)
    assert integrate_1d(lambda x: x, 2.0, 2.0) == (0.0, 0.0)
    spec = QuadratureSpec(tail_map=TailMap.LINEAR)
    assert integrate_1d(lambda x: np.exp(-x / 3), 0.0, math.inf, spec, scale=3.0)[0] == pytest.approx(3.0, rel=1e-9)
    with pytest.raises(DomainError):
        integrate_1d(lambda x: x, -math.inf, 0.0)


def test_integrate_1d_failure():
    spec = QuadratureSpec(max_subdivisions=5)
    with pytest.raises(QuadratureFailure):
        integrate_1d(lambda x: np.sin(1.0 / np.maximum(x, 1e-300)), 1e-6, 1.0, spec)


def test_integrate_batch():
    lo = np.array([0.0, 0.0, 1.0, 2.0])
    hi = np.array([1.0, 2.0, 1.0, 1.0])  # last two are empty
    vals, _ = integrate_batch(lambda x, idx: x ** (idx[:, None] + 1.0), lo, hi)
    np.testing.assert_allclose(vals, [0.5, 8 / 3, 0.0, 0.0], rtol=1e-12)
    with pytest.raises(DomainError):
        integrate_batch(lambda x, i: x, np.array([0.0]), np.array([math.inf]))


def test_integrate_2d_region():
    # triangle 0 <= x <= u <= 1
    v, _ = integrate_2d_region(lambda u, x: np.ones_like(x), 0.0, 1.0, lambda u: 0.0 * u, lambda u: u)
    assert v == pytest.approx(0.5, rel=1e-10)
    ref = integrate.dblquad(lambda x, u: math.exp(-u - x * u), 0, 2, 0, lambda u: 1 + u)[0]
    v, _ = integrate_2d_region(lambda u, x: np.exp(-u - x * u), 0.0, 2.0, lambda u: 0.0 * u, lambda u: 1 + u)
    assert v == pytest.approx(ref, rel=1e-9)
    # inverted inner range is clipped to empty
    v, _ = integrate_2d_region(lambda u, x: np.ones_like(x), 0.0, 1.0, lambda u: 1 + u, lambda u: u)
    assert v == 0.0


@pytest.mark.parametrize("key,value", sorted(ORACLES["inc_bessel"].items()))
def test_inc_bessel_frozen(key, value):
    nu, x, y = map(float, key.split("_"))
    assert inc_bessel_k(nu, x, y) == pytest.approx(value, rel=1e-9)


def test_inc_bessel_matches_outer_definition():
    # K_nu(x, y) = int_1^inf exp(-x t - y/t) t^(-nu-1) dt
    nu, x, y = 2.0, 0.4, 1.1
    ref = integrate.quad(lambda t: math.exp(-x * t - y / t) * t ** (-nu - 1), 1, math.inf, epsrel=1e-12)[0]
    assert inc_bessel_k(nu, x, y) == pytest.approx(ref, rel=1e-9)


def test_inc_bessel_zero_argument():
    # x = 0 collapses to gamma(nu, y) / y**nu
    assert inc_bessel_k(2.0, 0.0, 1.5) == pytest.approx(lower_inc_gamma(2.0, 1.5) / 1.5**2)
    with pytest.raises(DivergentIntegralError):
        inc_bessel_k_batch(0.0, np.array([0.0]), np.array([1.0]))
    with pytest.raises(DomainError):
        inc_bessel_k(1.0, -1.0, 1.0)


def test_quadrature_deterministic():
    f = lambda x: np.exp(-x) * np.sin(3 * x) ** 2
    assert integrate_1d(f, 0.0, math.inf) == integrate_1d(f, 0.0, math.inf)
