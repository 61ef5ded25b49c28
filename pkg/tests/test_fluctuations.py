import math
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from ssklab.eigensolve import Spectrum, eigenvalues_tridiagonal
from ssklab.errors import DegenerateInputError, InvalidArgumentError, InvalidDimensionError
from ssklab.fluctuations import (
    ExperimentManifest,
    ReferenceTable,
    alpha_from_beta,
    beta_from_alpha,
    empirical_cdf_from_table,
    ks_statistic,
    ks_two_sample,
    load_reference_table,
    moment_summary,
    normal_cdf,
    records_for_spectrum,
    regime_tag,
    resolve_threads,
    run_experiment,
    tw_statistic,
    x_q_statistic,
    y_statistic,
)
from ssklab.free_energy import limiting_free_energy
from ssklab.sampling import SeedSpec, sample_tridiagonal

TW1_TABLE = Path(__file__).parent / "data" / "tw1.csv"


def goe(n, i, base=41):
    return eigenvalues_tridiagonal(sample_tridiagonal(n, SeedSpec(base, i)))


# ---------------------------------------------------------------- X_Q

def test_x_q_single_eigenvalue():
    assert x_q_statistic(Spectrum(np.array([2.0])), 1.0) == -1.5


def test_x_q_direct_sum():
    s = goe(50, 0)
    x = 2.0 + 2.0 * 50 ** (-2 / 3)
    ref = math.fsum(math.log(abs(x - v)) for v in s.eigenvalues) - 25 - 50 ** (1 / 3) * 2 + math.log(50) / 6
    assert x_q_statistic(s, 2.0) == pytest.approx(ref, abs=1e-11)


def test_x_q_rejects_bad_q_and_collision():
    with pytest.raises(InvalidArgumentError):
        x_q_statistic(goe(10, 0), 0.0)
    n = 8
    with pytest.raises(DegenerateInputError):
        x_q_statistic(Spectrum(np.array([2 + n ** (-2 / 3)] + [0.0] * (n - 1))), 1.0)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6), st.floats(0.5, 10.0))
def test_x_q_permutation_invariant(idx, q):
    lam = goe(60, idx).eigenvalues
    perm = np.random.default_rng(idx).permutation(lam)
    assert x_q_statistic(Spectrum(perm), q) == x_q_statistic(Spectrum(lam), q)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10**6), st.floats(1.0, 10.0))
def test_x_q_derivative_identity(idx, q):
    n = 200
    s = goe(n, idx)
    x = 2 + q * n ** (-2 / 3)
    if x - s.lambda1 < 0.2 * n ** (-2 / 3):
        return
    h = 1e-5
    fd = (x_q_statistic(s, q + h) - x_q_statistic(s, q - h)) / (2 * h)
    exact = n ** (1 / 3) * (np.mean(1.0 / (x - s.eigenvalues)) - 1.0)
    assert abs(fd - exact) < 1e-6 * max(1.0, abs(exact))


def test_x_q_increasing_in_q_beyond_spectrum():
    s = goe(100, 3)
    qs = [1, 2, 5, 10]
    if 2 + 100 ** (-2 / 3) <= s.lambda1:
        pytest.skip("edge eigenvalue beyond the first evaluation point")
    vals = [x_q_statistic(s, q) for q in qs]
    # increasing only while the mean of 1/(x - lambda) exceeds 1
    derivs = [np.mean(1 / (2 + q * 100 ** (-2 / 3) - s.eigenvalues)) - 1 for q in qs]
    for k in range(len(qs) - 1):
        if derivs[k] > 0 and derivs[k + 1] > 0:
            assert vals[k + 1] > vals[k]


# ---------------------------------------------------------------- Y_N and tw

def test_y_at_log_n_twelve():
    # with F_N on its limit only the log term survives: (12/12)/sqrt(12/6)
    assert y_statistic(limiting_free_energy(1.0), 1.0, math.exp(12.0)) == pytest.approx(1 / math.sqrt(2), abs=1e-12)


@given(st.integers(3, 10**6), st.floats(0.1, 3.0), st.floats(-1.0, 1.0), st.floats(-1e-2, 1e-2))
def test_y_linear_in_free_energy(n, beta, f, delta):
    lhs = y_statistic(f + delta, beta, n) - y_statistic(f, beta, n)
    rhs = n * delta / math.sqrt(math.log(n) / 6)
    assert lhs == pytest.approx(rhs, rel=1e-6, abs=1e-6 * n)


def test_y_requires_n_three():
    with pytest.raises(InvalidDimensionError):
        y_statistic(0.25, 1.0, 2)


def test_tw_statistic_examples():
    n, beta = 1000, 1.7
    assert tw_statistic(limiting_free_energy(beta), beta, n) == pytest.approx(
        math.log(n) / 12 / (n ** (1 / 3) * 0.7), rel=1e-12
    )
    with pytest.raises(InvalidArgumentError):
        tw_statistic(0.0, 1.0, n)


@given(st.integers(3, 10**5), st.floats(0.01, 1.0), st.floats(-1.0, 1.0))
def test_tw_halves_when_beta_gap_doubles(n, gap, num):
    # choose F so the numerator is the same at both temperatures
    f1 = limiting_free_energy(1 + gap) + (num - math.log(n) / 12) / n
    f2 = limiting_free_energy(1 + 2 * gap) + (num - math.log(n) / 12) / n
    assert tw_statistic(f2, 1 + 2 * gap, n) == pytest.approx(0.5 * tw_statistic(f1, 1 + gap, n), rel=1e-6, abs=1e-9)


@given(st.integers(3, 10**6), st.floats(-5, 5))
def test_alpha_beta_bijection(n, alpha):
    assert alpha_from_beta(beta_from_alpha(alpha, n), n) == pytest.approx(alpha, abs=1e-9)


def test_alpha_zero_is_critical():
    assert beta_from_alpha(0.0, 1000) == 1.0
    assert regime_tag(0.0) == "critical"
    assert regime_tag(-1.0) == "high"
    assert regime_tag(5.0) == "low"


def test_per_sample_bookkeeping_identity():
    n = 300
    for i in range(5):
        s = goe(n, i)
        (rec,) = records_for_spectrum(s, [1.0], [5.0], 1e-9)
        assert rec.ok
        rebuilt = (-rec.x_q / 2 + rec.ht_residual) / math.sqrt(math.log(n) / 6)
        assert abs(rebuilt - rec.y_n) < 1e-10


def test_records_carry_low_temperature_fields():
    s = goe(200, 0)
    beta = beta_from_alpha(5.0, 200)
    (rec,) = records_for_spectrum(s, [beta], [5.0], 1e-9)
    assert rec.regime == "low"
    assert rec.tw_stat is not None and rec.lt_residual is not None
    assert rec.ht_residual is None
    assert rec.lambda1_scaled == pytest.approx(200 ** (2 / 3) * (s.lambda1 - 2))


# ---------------------------------------------------------------- experiments

def test_manifest_validation():
    with pytest.raises(InvalidArgumentError):
        ExperimentManifest(base_seed=1, n_grid=(100,), m_samples=2)
    with pytest.raises(InvalidArgumentError):
        ExperimentManifest(base_seed=1, n_grid=(100,), m_samples=2, betas=(1.0,), alphas=(0.0,))
    with pytest.raises(InvalidArgumentError):
        ExperimentManifest(base_seed=1, n_grid=(100,), m_samples=0, betas=(1.0,))
    with pytest.raises(InvalidArgumentError):
        ExperimentManifest(base_seed=1, n_grid=(200, 100), m_samples=1, betas=(1.0,))
    with pytest.raises(InvalidArgumentError):
        ExperimentManifest(base_seed=1, n_grid=(100,), m_samples=1, betas=(0.0,))
    with pytest.raises(InvalidArgumentError):
        ExperimentManifest(base_seed=-1, n_grid=(100,), m_samples=1, betas=(1.0,))


def test_manifest_round_trip():
    m = ExperimentManifest(base_seed=3, n_grid=(50, 100), m_samples=4, alphas=(-1.0, 0.0), q_list=(1, 5))
    assert ExperimentManifest.from_dict(m.to_dict()) == m
    assert m.total_samples == 2 * 2 * 2 * 4


def test_run_experiment_indices():
    m = ExperimentManifest(base_seed=7, n_grid=(100,), m_samples=10, betas=(1.0,))
    recs = list(run_experiment(m, threads=1))
    assert [r.sample_index for r in recs] == list(range(10))
    assert all(r.ok and r.n == 100 for r in recs)


def test_run_experiment_repeatable():
    m = ExperimentManifest(base_seed=7, n_grid=(60,), m_samples=1, betas=(0.8, 1.3))
    a = [r.to_dict() for r in run_experiment(m, threads=1)]
    b = [r.to_dict() for r in run_experiment(m, threads=1)]
    assert a == b


def test_run_experiment_thread_independent():
    m = ExperimentManifest(base_seed=9, n_grid=(40, 80), m_samples=6, alphas=(0.0, 2.0), q_list=(1, 5))
    a = [r.to_dict() for r in run_experiment(m, threads=1)]
    b = [r.to_dict() for r in run_experiment(m, threads=2)]
    assert a == b
    order = [(r["n"], r["beta"], r["q"], r["sample_index"]) for r in a]
    assert len(order) == m.total_samples
    # within each n the cells come out grouped, each in sample order
    for n in (40, 80):
        sub = [o for o in order if o[0] == n]
        for k in range(0, len(sub), 6):
            assert [o[3] for o in sub[k:k + 6]] == list(range(6))


def test_alpha_zero_matches_beta_one():
    a = ExperimentManifest(base_seed=2, n_grid=(50,), m_samples=3, alphas=(0.0,))
    b = ExperimentManifest(base_seed=2, n_grid=(50,), m_samples=3, betas=(1.0,))
    assert [r.to_dict() for r in run_experiment(a)] == [r.to_dict() for r in run_experiment(b)]


def test_resolve_threads(monkeypatch):
    monkeypatch.delenv("SSKLAB_THREADS", raising=False)
    assert resolve_threads() == 1
    monkeypatch.setenv("SSKLAB_THREADS", "3")
    assert resolve_threads() == 3
    assert resolve_threads(0) >= 1
    with pytest.raises(InvalidArgumentError):
        resolve_threads(-1)


# ---------------------------------------------------------------- KS and tables

@pytest.mark.parametrize("m", [1, 7, 100])
def test_ks_exact_quantiles(m):
    x = stats.norm.ppf((np.arange(1, m + 1) - 0.5) / m)
    assert ks_statistic(x, normal_cdf) == pytest.approx(0.5 / m, abs=1e-12)


def test_ks_single_median():
    assert ks_statistic([0.0], normal_cdf) == 0.5


def test_ks_matches_scipy():
    x = np.random.default_rng(5).normal(size=300)
    assert ks_statistic(x, normal_cdf) == pytest.approx(stats.kstest(x, "norm").statistic, abs=1e-14)


def test_ks_ten_thousand_normals():
    # P(D >= 0.02) for m = 1e4 from the Kolmogorov limit law
    assert stats.kstwobign.sf(0.02 * math.sqrt(1e4)) < 0.01
    x = np.random.default_rng(11).normal(size=10_000)
    assert ks_statistic(x, normal_cdf) < 0.02


def test_ks_rejects_bad_samples():
    with pytest.raises(DegenerateInputError):
        ks_statistic([], normal_cdf)
    with pytest.raises(DegenerateInputError):
        ks_statistic([0.0, math.nan], normal_cdf)


def test_ks_two_sample_identical():
    x = np.arange(10.0)
    assert ks_two_sample(x, x) == 0.0


@pytest.fixture
def small_table():
    return ReferenceTable("t", np.array([0.1, 0.5, 0.9]), np.array([-1.0, 0.0, 2.0]))


def test_table_cdf_at_rows(small_table):
    for lv, va in zip(small_table.levels, small_table.values):
        p, flag = empirical_cdf_from_table(small_table, va)
        assert p == lv and not flag
    assert empirical_cdf_from_table(small_table, small_table.quantile(0.5))[0] == 0.5


def test_table_cdf_tails(small_table):
    p, flag = empirical_cdf_from_table(small_table, -3.0)
    assert flag and 0 < p <= 0.1
    p, flag = empirical_cdf_from_table(small_table, 9.0)
    assert flag and 0.9 <= p < 1
    p, flag = empirical_cdf_from_table(small_table, np.array([-5.0, 1.0, 5.0]))
    assert list(flag) == [True, False, True]
    assert p[1] == pytest.approx(0.7)
    assert np.all(np.diff(p) > 0)


def test_table_rejects_non_monotone():
    with pytest.raises(InvalidArgumentError):
        ReferenceTable("t", np.array([0.1, 0.5]), np.array([1.0, 0.0]))
    with pytest.raises(InvalidArgumentError):
        ReferenceTable("t", np.array([0.0, 0.5]), np.array([0.0, 1.0]))


def test_tw1_table_moments():
    t = load_reference_table(TW1_TABLE)
    assert t.quantile(0.5) == pytest.approx(-1.2686, abs=2e-3)
    # mean from the quantile function by the midpoint rule on the central part
    lv = np.linspace(0.01, 0.99, 981)
    q = np.array([t.quantile(v) for v in lv])
    assert np.mean(q) == pytest.approx(-1.2065, abs=0.03)


def test_load_table_comments_and_header(tmp_path):
    p = tmp_path / "t.csv"
    p.write_text("# comment\nlevel,value\n0.25,-1\n0.75,1\n")
    t = load_reference_table(p)
    assert t.name == "t" and t.quantile(0.5) == 0.0
    bad = tmp_path / "bad.csv"
    bad.write_text("p,x\n0.25,-1\n0.75,1\n")
    with pytest.raises(InvalidArgumentError):
        load_reference_table(bad)


# ---------------------------------------------------------------- moments

def test_moment_summary_examples():
    mean, var, skew = moment_summary([-1.0, 1.0])
    assert mean == 0.0 and var == 2.0 and math.isnan(skew)
    assert moment_summary([3.0] * 5)[1] == 0.0
    with pytest.raises(DegenerateInputError):
        moment_summary([1.0])


def test_moment_summary_matches_scipy():
    x = np.random.default_rng(1).gamma(2.0, size=500)
    mean, var, skew = moment_summary(x)
    assert mean == pytest.approx(np.mean(x))
    assert var == pytest.approx(np.var(x, ddof=1))
    assert skew == pytest.approx(stats.skew(x, bias=False))


def test_moment_summary_large_normal():
    x = np.random.default_rng(2).normal(size=100_000)
    assert abs(moment_summary(x)[1] - 1) < 0.03

