import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from ssklab.eigensolve import Spectrum, eigenvalues_tridiagonal
from ssklab.errors import InvalidArgumentError, PoleError, RegimeMisuseError
from ssklab.sampling import SeedSpec, sample_tridiagonal
from ssklab.saddle import (
    find_saddle,
    g_derivative,
    g_value,
    ht_surrogate_residual,
    surrogate_saddle_ht,
    surrogate_saddle_ht_clamped,
    surrogate_saddle_lt,
)
from ssklab.spectral import semicircle_stieltjes
from ssklab.verify import saddle_bracket_holds


def test_g_value_examples():
    s = Spectrum(np.zeros(4))
    assert g_value(s, 1.0, 1.0) == pytest.approx(1.0)
    assert g_value(s, 1.0, math.e) == pytest.approx(math.e - 1)
    assert isinstance(g_value(s, 1.0, 2.0), float)
    with pytest.raises(PoleError):
        g_value(Spectrum([0.5, 0.0]), 1.0, 0.5)


def test_g_conjugate_symmetry():
    rng = np.random.default_rng(1)
    s = Spectrum(rng.standard_normal(30))
    for _ in range(20):
        z = complex(rng.normal(0, 3), rng.normal(0, 3))
        assert abs(np.conj(g_value(s, 1.3, z)) - g_value(s, 1.3, np.conj(z))) < 1e-13


def test_g_derivative_examples():
    assert g_derivative(Spectrum([0.0]), 2.0, 1.0, 1) == pytest.approx(1.0)
    assert g_derivative(Spectrum([1.0, -1.0]), 1.0, 2.0, 2) == pytest.approx(5 / 9)
    with pytest.raises(InvalidArgumentError):
        g_derivative(Spectrum([0.0]), 1.0, 1.0, 5)


def test_g_derivative_finite_difference_order():
    s = Spectrum([0.3, -0.2, -1.1])
    z, beta = 1.7, 0.8
    errs = []
    for h in (1e-3, 1e-4):
        fd = (g_value(s, beta, z + h) - g_value(s, beta, z - h)) / (2 * h)
        errs.append(abs(fd - g_derivative(s, beta, z, 1)))
    # central differences are second order
    assert errs[1] < errs[0] / 50


@settings(max_examples=40, deadline=None)
@given(arrays(float, st.integers(1, 40), elements=st.floats(-3, 3)), st.floats(0.2, 4.0),
       st.floats(0.1, 3.0), st.floats(-2.0, 2.0))
def test_derivative_chain_against_finite_differences(lam, beta, dx, y):
    s = Spectrum(lam)
    z = complex(s.lambda1 + dx, y)
    h = 1e-5 * abs(z - s.lambda1)
    prev = lambda w: g_value(s, beta, w)
    for k in range(1, 5):
        fd = (prev(z + h) - prev(z - h)) / (2 * h)
        exact = g_derivative(s, beta, z, k)
        assert abs(fd - exact) <= 1e-6 * max(abs(exact), 1e-3 * abs(z - s.lambda1) ** (-k))
        prev = (lambda kk: (lambda w: g_derivative(s, beta, w, kk)))(k)


@pytest.mark.parametrize("beta", [0.1, 1.0, 3.7])
def test_saddle_all_equal(beta):
    sad = find_saddle(Spectrum(np.zeros(10)), beta)
    assert sad.gamma == 1 / beta


def test_saddle_two_point_closed_form():
    sad = find_saddle(Spectrum([1.0, -1.0]), 1.0)
    assert sad.gamma == pytest.approx((1 + math.sqrt(5)) / 2, abs=1e-12)


def test_saddle_bracket_at_criticality():
    s = eigenvalues_tridiagonal(sample_tridiagonal(1000, SeedSpec(4, 0)))
    sad = find_saddle(s, 1.0)
    assert saddle_bracket_holds(sad.delta, 1000, 1.0)
    assert sad.delta <= 20


@settings(max_examples=80, deadline=None)
@given(arrays(float, st.integers(1, 60), elements=st.floats(-3, 3)), st.floats(0.05, 20.0))
def test_saddle_postconditions(lam, beta):
    s = Spectrum(lam)
    sad = find_saddle(s, beta)
    tol = 1e-12 * max(1.0, beta)
    assert sad.gamma > s.lambda1
    assert sad.offset > 0
    assert sad.residual <= tol
    assert abs(g_derivative(s, beta, sad.gamma, 1)) <= 10 * tol + 1e-15 * np.max(1 / (sad.gamma - lam) ** 2)
    lo, hi = sad.bracket
    assert s.lambda1 < lo <= sad.gamma <= hi
    assert sad.g2 == pytest.approx(g_derivative(s, beta, sad.gamma, 2), rel=1e-9)
    assert sad.g3 == pytest.approx(g_derivative(s, beta, sad.gamma, 3), rel=1e-9)


@settings(max_examples=60, deadline=None)
@given(arrays(float, st.integers(2, 50), elements=st.floats(-3, 3)), st.floats(0.1, 5.0), st.floats(-5, 5))
def test_saddle_shift_covariance(lam, beta, c):
    a = find_saddle(Spectrum(lam), beta)
    b = find_saddle(Spectrum(lam + c), beta)
    assert abs(b.gamma - (a.gamma + c)) <= 1e-10


@settings(max_examples=60, deadline=None)
@given(arrays(float, st.integers(1, 30), elements=st.floats(-3, 3)), st.floats(1e-4, 2), st.floats(1e-4, 2))
def test_resolvent_sum_strictly_decreasing(lam, u1, du):
    s = Spectrum(lam)
    g1, g2 = s.lambda1 + u1, s.lambda1 + u1 + du
    assume(g2 > g1)
    assert np.mean(1 / (g2 - lam)) < np.mean(1 / (g1 - lam))


def test_ht_surrogates():
    assert surrogate_saddle_ht(1.0) == 2.0
    assert surrogate_saddle_ht(0.5) == 2.5
    assert semicircle_stieltjes(2.5) == pytest.approx(-0.5)
    assert ht_surrogate_residual(0.9) < 1e-12
    for beta in (1.2, 0.0, -1.0):
        with pytest.raises(RegimeMisuseError):
            surrogate_saddle_ht(beta)
    assert surrogate_saddle_ht_clamped(1.0, 3.0, 1000) == 2 + 3 * 1000 ** (-2 / 3)
    assert surrogate_saddle_ht_clamped(0.5, 3.0, 1000) == 2.5
    n = 10**6
    assert surrogate_saddle_ht_clamped(0.99, 1.0, n) == max((0.99**2 + 1) / 0.99, 2 + n ** (-2 / 3))
    with pytest.raises(InvalidArgumentError):
        surrogate_saddle_ht_clamped(0.5, 0.0, 100)


@settings(max_examples=100, deadline=None)
@given(st.floats(1e-3, 0.999))
def test_ht_surrogate_identity(beta):
    assert ht_surrogate_residual(beta) < 1e-12


@settings(max_examples=100, deadline=None)
@given(st.floats(0.999, 1.0))
def test_ht_surrogate_identity_near_edge(beta):
    # m_sc has a square-root singularity at 2, so the rounding of
    # gamma = (beta^2 + 1)/beta is amplified by |m_sc'| ~ 1/(2 sqrt(gamma - 2))
    gamma = surrogate_saddle_ht(beta)
    amplification = 1.0 / (2.0 * math.sqrt(max(gamma - 2.0, 1e-300)))
    assert ht_surrogate_residual(beta) < 1e-12 + 8 * 2.2e-16 * gamma * amplification


def test_lt_surrogate():
    lam = np.linspace(-2, 2, 100)
    assert surrogate_saddle_lt(Spectrum(lam), 1.5) == pytest.approx(2 + 1 / 50)
    with pytest.raises(RegimeMisuseError):
        surrogate_saddle_lt(Spectrum(lam), 1 + 1e-9)


def test_lt_surrogate_tracks_saddle():
    n = 1000
    beta = 1 + 5 * math.sqrt(math.log(n)) * n ** (-1 / 3)
    hits = 0
    for i in range(200):
        s = eigenvalues_tridiagonal(sample_tridiagonal(n, SeedSpec(21, i)))
        sad = find_saddle(s, beta)
        hits += abs(sad.gamma - surrogate_saddle_lt(s, beta)) <= sad.offset / 2
    assert hits >= 180
