import math
import time

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate
from scipy.special import gammaln
from scipy.stats import norm

from conftest import preset_tails
from doobgls.errors import DomainError, NonIntegrableError
from doobgls.quadrature import (
    GeneralH,
    PowerH,
    QuadratureConfig,
    gauss_kronrod_15,
    kappa_p,
    log_moment,
    moment_from_tail,
    norm_from_tail,
    truncated_mean,
)
from doobgls.tail_model import (
    EmpiricalTable,
    Exponential,
    LogSquare,
    PowerLog,
    Scaled,
    SlowlyVarying,
    Subgaussian,
    eval_tail,
    point_mass,
)


# -- oracles ----------------------------------------------------------------

def exp_norm(p):
    return math.exp(gammaln(p + 1) / p)


def subgaussian_norm(c, p):
    # T = exp(-c t^2)  =>  E tau^p = Gamma(p/2 + 1) c^(-p/2)
    return math.exp((gammaln(p / 2 + 1) - p / 2 * math.log(c)) / p)


def logsquare_norm(g, p):
    # e^p from [0, e) plus p sqrt(2 pi g) e^{g p^2/2} P(Z > (1 - g p)/sqrt g)
    tail = p * math.sqrt(2 * math.pi * g) * math.exp(g * p * p / 2) * norm.sf((1 - g * p) / math.sqrt(g))
    return (math.exp(p) + tail) ** (1 / p)


def powerlog_norm(beta, p):
    # gamma = 0, L = 1: jump from 1 to e^-beta at e
    return (math.exp(p) + p * math.exp(p - beta) / (beta - p)) ** (1 / p)


def quad_norm(T, p):
    f = lambda t: p * t ** (p - 1) * float(eval_tail(T, t))
    pts = [b for b in T.breakpoints]
    a = integrate.quad(f, 0, max(pts + [1.0]), points=pts or None, limit=500)[0]
    b = integrate.quad(f, max(pts + [1.0]), np.inf, limit=500)[0]
    return (a + b) ** (1 / p)


# -- moments ----------------------------------------------------------------

@pytest.mark.parametrize("p", [1, 1.5, 2, 3, 5, 10, 37.5, 100, 1000, 1e4])
def test_exponential_moment_oracle(p):
    est = moment_from_tail(Exponential(), p)
    assert not est.divergent
    assert est.value == pytest.approx(exp_norm(p), rel=1e-9)


def test_exponential_examples():
    assert moment_from_tail(Exponential(), 2).value == pytest.approx(math.sqrt(2), rel=1e-10)
    assert moment_from_tail(Exponential(), 1).value == pytest.approx(1.0, rel=1e-10)


@given(p=st.floats(1.0, 300.0))
def test_exponential_moment_property(p):
    assert moment_from_tail(Exponential(), p).value == pytest.approx(exp_norm(p), rel=1e-8)


@pytest.mark.parametrize("c,p", [(1.0, 1), (1.0, 2.5), (0.5, 4), (3.0, 20), (1.0, 150)])
def test_subgaussian_moment_oracle(c, p):
    assert moment_from_tail(Subgaussian(c), p).value == pytest.approx(subgaussian_norm(c, p), rel=1e-8)


@pytest.mark.parametrize("g,p", [(1.0, 1), (1.0, 3), (2.0, 2), (0.5, 10), (1.0, 30)])
def test_logsquare_moment_oracle(g, p):
    assert moment_from_tail(LogSquare(g), p).value == pytest.approx(logsquare_norm(g, p), rel=1e-8)


@pytest.mark.parametrize("beta,p", [(3.0, 1), (3.0, 2), (3.0, 2.9), (3.0, 2.9999), (5.0, 4.5)])
def test_powerlog_moment_oracle(beta, p):
    assert moment_from_tail(PowerLog(beta), p).value == pytest.approx(powerlog_norm(beta, p), rel=1e-8)


def test_powerlog_with_log_factors_against_scipy():
    T = PowerLog(4.0, 1.5, SlowlyVarying(0.5))
    for p in (1.0, 2.0, 3.0):
        assert moment_from_tail(T, p).value == pytest.approx(quad_norm(T, p), rel=1e-7)


@pytest.mark.parametrize("beta,p", [(2.0, 2.0), (3.0, 3.0), (3.0, 4.5), (2.5, 10.0)])
def test_heavy_tail_divergence(beta, p):
    est = moment_from_tail(PowerLog(beta), p)
    assert est.divergent and est.value == math.inf


def test_powerlog_log_factor_divergence_detected_numerically():
    # gamma > 0 at p = beta: integrand (ln t)^gamma / t, caught by the growth test
    assert moment_from_tail(PowerLog(2.0, 1.0), 2.0).divergent


def test_p_below_one_rejected():
    with pytest.raises(DomainError):
        moment_from_tail(Exponential(), 0.5)


def test_norm_from_tail_accepts_small_orders():
    assert norm_from_tail(Exponential(), 0.5).value == pytest.approx(math.gamma(1.5) ** 2, rel=1e-9)


def test_empirical_table_moment_is_exact():
    T = EmpiricalTable((1.0, 2.0, 5.0), (0.6, 0.3, 0.0))
    # atoms: P(1) = 0.4, P(2) = 0.3, P(5) = 0.3
    want = (0.4 * 1 + 0.3 * 8 + 0.3 * 125) ** (1 / 3)
    assert moment_from_tail(T, 3).value == pytest.approx(want, rel=1e-14)
    assert moment_from_tail(point_mass(1.0), 7).value == 1.0


@given(k=st.floats(0.01, 100.0), p=st.floats(1.0, 30.0))
def test_scaled_moment_homogeneous(k, p):
    a = moment_from_tail(Scaled(Exponential(), k), p).value
    assert a == pytest.approx(k * exp_norm(p), rel=1e-9)


def test_moments_nondecreasing_in_p():
    for T in preset_tails():
        top = 20.0
        if isinstance(T, PowerLog):
            top = T.beta - 0.05
        ps = np.linspace(1, top, 25)
        vals = [moment_from_tail(T, p).value for p in ps]
        assert np.all(np.diff(vals) >= -1e-9 * np.abs(vals[1:])), T


def test_moment_is_cached_and_fast():
    t0 = time.perf_counter()
    for p in (1, 1.5, 2, 3, 5, 10):
        moment_from_tail(Exponential(), p, QuadratureConfig(rtol=1e-9))
    assert time.perf_counter() - t0 < 1.0
    assert log_moment(Exponential(), 2.0) is log_moment(Exponential(), 2.0)


def test_config_validation():
    with pytest.raises(DomainError):
        QuadratureConfig(rtol=0)
    with pytest.raises(DomainError):
        QuadratureConfig(eps_tail=1.0)
    with pytest.raises(DomainError):
        QuadratureConfig(max_subdivisions=0)


@pytest.mark.parametrize("deg", range(0, 23))
def test_kronrod_exact_on_polynomials(deg):
    k, _ = gauss_kronrod_15(lambda x: x**deg, -1.0, 2.0)
    assert k == pytest.approx((2.0 ** (deg + 1) - (-1.0) ** (deg + 1)) / (deg + 1), rel=1e-13, abs=1e-13)


# -- kappa_p ----------------------------------------------------------------

def test_kappa_examples():
    assert kappa_p(PowerH(1.0), 3, 2.0) == pytest.approx(2.0)
    assert kappa_p(PowerH(2.0), 3, 1.0) == pytest.approx(1.0)
    assert kappa_p(PowerH(1.0), 2, 5.0) == pytest.approx(5.0)
    assert kappa_p(PowerH(1.0), 2, 0.0) == 0.0


def test_kappa_errors():
    with pytest.raises(NonIntegrableError):
        kappa_p(PowerH(2.0), 2.0, 1.0)
    with pytest.raises(NonIntegrableError):
        kappa_p(PowerH(2.0), 2.0, 1.0, method="numeric")
    with pytest.raises(DomainError):
        kappa_p(PowerH(1.0), 2.0, -1.0)
    with pytest.raises(NonIntegrableError):
        kappa_p(GeneralH(lambda t: t**3, "t^3"), 2.0, 1.0)


@given(delta=st.floats(0.1, 4.0), gap=st.floats(0.05, 10.0), x=st.floats(1e-6, 1e4))
def test_kappa_numeric_matches_closed_form(delta, gap, x):
    h = PowerH(delta)
    p = delta + gap
    assert kappa_p(h, p, x, method="numeric") == pytest.approx(kappa_p(h, p, x), rel=1e-8)


def test_kappa_general_h_against_scipy():
    h = GeneralH(lambda t: t * np.log1p(t) + t**2, "mixed")
    for x in (0.3, 1.0, 7.0):
        want = integrate.quad(lambda t: t**2 / (t * math.log1p(t) + t**2), 0, x)[0]
        assert kappa_p(h, 3.0, x) == pytest.approx(want, rel=1e-8)


# -- truncated means --------------------------------------------------------

def test_truncated_mean_examples():
    assert truncated_mean(Exponential(), 0).value == pytest.approx(1.0, rel=1e-10)
    assert truncated_mean(Exponential(), 1).value == pytest.approx(2 * math.exp(-1), rel=1e-10)
    assert truncated_mean(Exponential(), 50).value == pytest.approx(51 * math.exp(-50), rel=1e-9)


@given(t=st.floats(0.0, 300.0))
def test_truncated_mean_exponential_closed_form(t):
    assert truncated_mean(Exponential(), t).value == pytest.approx((t + 1) * math.exp(-t), rel=1e-8, abs=1e-300)


def test_truncated_mean_at_zero_is_first_moment():
    for T in preset_tails():
        assert truncated_mean(T, 0).value == pytest.approx(moment_from_tail(T, 1).value, rel=1e-8), T


def test_truncated_mean_table_and_divergence():
    T = EmpiricalTable((1.0, 2.0, 5.0), (0.6, 0.3, 0.0))
    # E[tau 1{tau > 1.5}] = 0.3*2 + 0.3*5
    assert truncated_mean(T, 1.5).value == pytest.approx(2.1, rel=1e-14)
    assert truncated_mean(PowerLog(1.5), 3.0).value > 0
    assert truncated_mean(EmpiricalTable((1.0,), (0.5,)), 3.0).divergent
    with pytest.raises(DomainError):
        truncated_mean(Exponential(), -1.0)
