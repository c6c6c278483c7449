import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bivisar.marginals import Marginal, NegBin, ParameterError, Poisson, parse_marginal
from oracles import expect, nb_pmf, pois_pmf

MEANS = [0.2, 0.5, 1.0, 1.3, 2.0, 3.0, 4.0]
PHIS = [0.5, 1.0, 2.0, 5.0, 20.0]


def test_pmf_examples():
    assert Poisson(1.3).pmf(0) == pytest.approx(0.2725317930340126, rel=1e-14)
    assert Poisson(1.3).pmf(1) == pytest.approx(0.3542913309442164, rel=1e-14)
    assert NegBin(1.2, 2).pmf(0) == pytest.approx(0.390625, rel=1e-14)


@pytest.mark.parametrize("m", [Poisson(1.3), NegBin(1.2, 2), NegBin(4.0, 0.5), Poisson(0.2)])
def test_normalization(m):
    if m.variance() < 10:
        assert m.pmf_vector(201).sum() == pytest.approx(1.0, abs=1e-12)
    n = m.truncation_point() + 1
    assert m.pmf_vector(n).sum() >= 1 - 1e-10


def test_pmf_matches_oracle():
    for x in range(12):
        assert Poisson(2.7).pmf(x) == pytest.approx(pois_pmf(2.7, x), rel=1e-12)
        assert NegBin(1.7, 0.8).pmf(x) == pytest.approx(nb_pmf(1.7, 0.8, x), rel=1e-12)


@pytest.mark.parametrize("bad", [lambda: Poisson(0), lambda: Poisson(-1), lambda: NegBin(1, 0),
                                 lambda: NegBin(-1, 2), lambda: Marginal("poisson", 1.0, 2.0)])
def test_parameter_domain(bad):
    with pytest.raises(ParameterError):
        bad()


def test_negative_support_rejected():
    with pytest.raises(ParameterError):
        Poisson(1.0).pmf(-1)


def test_mean_sd():
    assert Poisson(1.3).mean_sd() == (1.3, math.sqrt(1.3))
    assert NegBin(1.2, 2).mean_sd() == pytest.approx((1.2, math.sqrt(1.92)))
    assert NegBin(1.2, 1e6).variance() == pytest.approx(Poisson(1.2).variance(), abs=1e-5)


def test_laplace_examples():
    assert Poisson(1.3).laplace_at_one() == pytest.approx(0.4396586157647823, abs=1e-12)
    assert NegBin(1.2, 2).laplace_at_one() == pytest.approx(0.5256539703986897, abs=1e-12)
    assert Poisson(1e-9).laplace_at_one() == pytest.approx(1.0, abs=1e-8)


def test_laplace_closed_form_matches_summation_grid():
    for mu in MEANS:
        m = Poisson(mu)
        assert m.laplace_at_one() == pytest.approx(expect(lambda x: math.exp(-x), "poisson", mu), abs=1e-10)
        for phi in PHIS:
            m = NegBin(mu, phi)
            ref = expect(lambda x: math.exp(-x), "negbin", mu, phi, n=400)
            assert m.laplace_at_one() == pytest.approx(ref, abs=1e-10)


def test_expected_x_t_pow_x_examples():
    nb = NegBin(1.2, 2)
    assert nb.expected_x_t_pow_x(1.0) == pytest.approx(1.2, abs=1e-14)
    assert nb.expected_x_t_pow_x(0.625) == pytest.approx(0.4079932681110762, abs=1e-12)
    assert Poisson(1.3).expected_x_t_pow_x(math.exp(-1)) == pytest.approx(0.2102637756358854, abs=1e-12)


def test_expected_x_t_pow_x_grid():
    for mu in MEANS:
        for t in (0.2, 0.5, math.exp(-1), 0.9, 1.0):
            ref = expect(lambda x: x * t**x, "poisson", mu)
            assert Poisson(mu).expected_x_t_pow_x(t) == pytest.approx(ref, abs=1e-10)
            for phi in PHIS:
                ref = expect(lambda x: x * t**x, "negbin", mu, phi, n=600)
                assert NegBin(mu, phi).expected_x_t_pow_x(t) == pytest.approx(ref, abs=1e-10)


@pytest.mark.parametrize("t", [0.0, -0.5, 1.5])
def test_expected_x_t_pow_x_domain(t):
    with pytest.raises(ParameterError):
        Poisson(1.0).expected_x_t_pow_x(t)


def test_negbin_poisson_limit():
    for x in range(16):
        assert abs(NegBin(1.3, 1e6).pmf(x) - Poisson(1.3).pmf(x)) < 1e-5


def test_truncation_point():
    m = Poisson(1.3)
    k = m.truncation_point()
    cdf = np.cumsum(m.pmf_vector(k + 1))
    assert cdf[-1] > 1 - 1e-12 and cdf[-2] <= 1 - 1e-12
    assert NegBin(50.0, 0.05).truncation_point() == 400


@settings(max_examples=50, deadline=None)
@given(st.floats(0.05, 6.0), st.floats(0.3, 50.0))
def test_pmf_sums_to_one(mu, phi):
    for m in (Poisson(mu), NegBin(mu, phi)):
        n = m.truncation_point() + 1
        assert m.pmf_vector(n).sum() == pytest.approx(1.0, abs=1e-10)


def test_parse_marginal():
    assert parse_marginal("negbin:1.2,2") == NegBin(1.2, 2)
    assert parse_marginal("poisson:1.3") == Poisson(1.3)
    with pytest.raises(ParameterError):
        parse_marginal("gamma:1")
