import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from ssklab.eigensolve import (
    Spectrum,
    count_below,
    eigenvalues_dense,
    eigenvalues_tridiagonal,
    householder_tridiagonalize,
    top_k_eigenvalues,
)
from ssklab.errors import InvalidArgumentError, InvalidMatrixError
from ssklab.sampling import DenseSymmetric, SeedSpec, TridiagonalSymmetric, sample_tridiagonal


def charpoly_roots(d, e, tol=1e-13):
    """Eigenvalues by bisection on the three-term recurrence of det(T - x)."""
    n = d.size

    def sign_changes(x):
        p_prev, p = 1.0, d[0] - x
        count = int(p < 0)
        for i in range(1, n):
            p_prev, p = p, (d[i] - x) * p - e[i - 1] ** 2 * p_prev
            count += int((p < 0) != (p_prev < 0))
        return count

    r = np.max(np.abs(d)) + 2 * np.max(np.abs(e)) + 1
    out = []
    for k in range(n):
        lo, hi = -r, r
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            if sign_changes(mid) > k:
                hi = mid
            else:
                lo = mid
        out.append(0.5 * (lo + hi))
    return np.sort(out)[::-1]


def test_two_by_two():
    s = eigenvalues_tridiagonal(TridiagonalSymmetric([0.0, 0.0], [1.0]))
    assert np.allclose(s.eigenvalues, [1, -1], atol=1e-13)


def test_diagonal_constant():
    s = eigenvalues_tridiagonal(TridiagonalSymmetric(np.full(7, 0.3), np.zeros(6)))
    assert np.all(s.eigenvalues == 0.3)


def test_random_8x8_against_recurrence():
    rng = np.random.default_rng(4)
    d, e = rng.standard_normal(8), np.abs(rng.standard_normal(7))
    s = eigenvalues_tridiagonal(TridiagonalSymmetric(d, e))
    assert np.max(np.abs(s.eigenvalues - charpoly_roots(d, e))) < 1e-10


def test_dense_closed_forms():
    s = eigenvalues_dense(DenseSymmetric(np.array([[0.4, 1.5], [1.5, 0.4]])))
    assert np.allclose(s.eigenvalues, [1.9, -1.1], atol=1e-13)
    s = eigenvalues_dense(DenseSymmetric(np.diag([1.0, 3.0, 2.0])))
    assert np.allclose(s.eigenvalues, [3, 2, 1], atol=1e-13)


def test_dense_matches_its_tridiagonal_form():
    rng = np.random.default_rng(5)
    a = rng.standard_normal((6, 6))
    m = DenseSymmetric(a + a.T)
    t = householder_tridiagonalize(m)
    assert np.max(np.abs(eigenvalues_dense(m).eigenvalues - eigenvalues_tridiagonal(t).eigenvalues)) < 1e-9
    assert np.allclose(np.linalg.eigvalsh(t.to_dense()), np.linalg.eigvalsh(m.entries), atol=1e-12)


def test_dense_large_against_lapack():
    rng = np.random.default_rng(6)
    a = rng.standard_normal((300, 300))
    a = (a + a.T) / np.sqrt(600)
    ref = np.linalg.eigvalsh(a)[::-1]
    assert np.max(np.abs(eigenvalues_dense(DenseSymmetric(a)).eigenvalues - ref)) < 1e-11


def test_top_k():
    m = sample_tridiagonal(50, SeedSpec(1, 2))
    full = eigenvalues_tridiagonal(m).eigenvalues
    tol = 1e-12 * (np.max(np.abs(m.diag)) + 2 * np.max(m.offdiag))
    assert np.max(np.abs(top_k_eigenvalues(m, 2) - full[:2])) <= tol
    assert np.max(np.abs(top_k_eigenvalues(m, 50) - full)) <= tol
    m = TridiagonalSymmetric([5.0, 1.0, 1.0], [0.0, 0.0])
    assert np.allclose(top_k_eigenvalues(m, 1), [5.0])
    for k in (0, 4):
        with pytest.raises(InvalidArgumentError):
            top_k_eigenvalues(m, k)


def test_against_lapack_tridiagonal():
    from scipy.linalg import eigvalsh_tridiagonal

    m = sample_tridiagonal(1000, SeedSpec(8, 0))
    ref = eigvalsh_tridiagonal(m.diag, m.offdiag)[::-1]
    assert np.max(np.abs(eigenvalues_tridiagonal(m).eigenvalues - ref)) < 1e-11


def test_blocks_split_on_zero_coupling():
    d = np.array([1.0, 2.0, 3.0, -1.0])
    e = np.array([0.5, 0.0, 0.25])
    s = eigenvalues_tridiagonal(TridiagonalSymmetric(d, e))
    ref = np.linalg.eigvalsh(TridiagonalSymmetric(d, e).to_dense())[::-1]
    assert np.allclose(s.eigenvalues, ref, atol=1e-13)


def test_nonfinite_rejected():
    with pytest.raises(InvalidMatrixError):
        eigenvalues_tridiagonal(TridiagonalSymmetric([1.0, np.nan], [1.0]))
    with pytest.raises(InvalidMatrixError):
        eigenvalues_dense(DenseSymmetric(np.array([[np.inf, 0], [0, 1.0]])))
    with pytest.raises(InvalidArgumentError):
        eigenvalues_tridiagonal(TridiagonalSymmetric([1.0, 2.0], [1.0]), tol=0.0)


def test_spectrum_sorts_and_freezes():
    s = Spectrum([0.5, 2.0, -1.0])
    assert list(s.eigenvalues) == [2.0, 0.5, -1.0]
    assert s.lambda1 == 2.0 and s.n == 3
    with pytest.raises(ValueError):
        s.eigenvalues[0] = 1.0
    with pytest.raises(InvalidMatrixError):
        Spectrum([1.0, np.nan])


tri = st.integers(2, 25).flatmap(
    lambda n: st.tuples(
        arrays(float, n, elements=st.floats(-5, 5)),
        arrays(float, n - 1, elements=st.floats(0, 5)),
    )
)


@settings(max_examples=60, deadline=None)
@given(tri, st.floats(-8, 8))
def test_sturm_count_consistency(de, x):
    m = TridiagonalSymmetric(*de)
    s = eigenvalues_tridiagonal(m)
    tol = 1e-12 * max(1.0, np.max(np.abs(m.diag)) + 2 * np.max(m.offdiag, initial=0.0))
    # probes closer than the tolerance to an eigenvalue are ambiguous
    if np.min(np.abs(s.eigenvalues - x)) > 10 * tol:
        assert m.n - count_below(m, x) == int(np.sum(s.eigenvalues > x))


@settings(max_examples=60, deadline=None)
@given(tri)
def test_trace_identities_and_reversal(de):
    m = TridiagonalSymmetric(*de)
    lam = eigenvalues_tridiagonal(m).eigenvalues
    scale = max(1.0, np.max(np.abs(m.diag)) + 2 * np.max(m.offdiag, initial=0.0))
    n = m.n
    assert abs(lam.sum() - m.diag.sum()) <= 1e-8 * n * scale**2
    assert abs((lam**2).sum() - np.sum(m.to_dense() ** 2)) <= 1e-8 * n * scale**2
    rev = eigenvalues_tridiagonal(TridiagonalSymmetric(m.diag[::-1], m.offdiag[::-1])).eigenvalues
    assert np.max(np.abs(rev - lam)) <= 4e-12 * scale
