"""Eigenvalues of symmetric matrices: Sturm bisection and Householder reduction."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _sturm
from .errors import InvalidArgumentError, InvalidMatrixError
from .sampling import DenseSymmetric, SeedSpec, TridiagonalSymmetric

ENSEMBLE_TAGS = ("dense-goe", "tridiagonal", "synthetic")

_MAX_SWEEPS = 200
_PIVMIN = 1e-290


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues sorted in decreasing order, with provenance.

    Unsorted input is sorted on construction, so synthetic spectra can be
    built from any sequence of values.
    """

    eigenvalues: np.ndarray
    ensemble_tag: str = "synthetic"
    seed: SeedSpec | None = field(default=None, compare=False)

    def __post_init__(self):
        lam = np.asarray(self.eigenvalues, dtype=float).ravel()
        if lam.size < 1:
            raise InvalidMatrixError("spectrum must contain at least one eigenvalue")
        if not np.all(np.isfinite(lam)):
            raise InvalidMatrixError("spectrum contains non-finite values")
        if self.ensemble_tag not in ENSEMBLE_TAGS:
            raise ValueError(f"unknown ensemble tag {self.ensemble_tag!r}")
        lam = np.sort(lam)[::-1].copy()
        lam.setflags(write=False)
        object.__setattr__(self, "eigenvalues", lam)

    @property
    def n(self) -> int:
        return self.eigenvalues.size

    @property
    def lambda1(self) -> float:
        return float(self.eigenvalues[0])


def spectral_scale(m: TridiagonalSymmetric) -> float:
    emax = float(np.max(m.offdiag)) if m.offdiag.size else 0.0
    return float(np.max(np.abs(m.diag))) + 2.0 * emax


def default_tolerance(m: TridiagonalSymmetric) -> float:
    return 1e-12 * max(1.0, spectral_scale(m))


def _validate(m: TridiagonalSymmetric):
    if not (np.all(np.isfinite(m.diag)) and np.all(np.isfinite(m.offdiag))):
        raise InvalidMatrixError("matrix has non-finite entries")


def _gershgorin(d, e):
    r = np.zeros_like(d)
    r[:-1] += e
    r[1:] += e
    return float(np.min(d - r)), float(np.max(d + r))


def count_below(m: TridiagonalSymmetric, x: float) -> int:
    """Number of eigenvalues strictly below ``x`` (Sturm sign-change count)."""
    _validate(m)
    q = np.empty(1)
    counts = np.empty(1, dtype=np.int64)
    _sturm.count_below_many(m.diag, m.offdiag**2, np.array([float(x)]), _PIVMIN, q, counts)
    return int(counts[0])


def _bisect(d, e, ks, tol):
    lo, hi = _gershgorin(d, e)
    pad = 2.0 * tol + 1e-14 * max(1.0, abs(lo), abs(hi))
    vals, _ = _sturm.bisect_indices(
        np.ascontiguousarray(d),
        np.ascontiguousarray(e * e),
        np.asarray(ks, dtype=np.int64),
        lo - pad,
        hi + pad,
        tol,
        _PIVMIN,
        _MAX_SWEEPS,
    )
    return vals


def _split_points(d, e):
    # a zero (or negligible) coupling decouples the matrix into blocks
    tiny = np.finfo(float).eps * np.sqrt(np.abs(d[:-1]) * np.abs(d[1:]))
    return np.flatnonzero(e <= tiny) + 1


def eigenvalues_tridiagonal(m: TridiagonalSymmetric, tol: float | None = None) -> Spectrum:
    """All eigenvalues of a symmetric tridiagonal matrix by Sturm bisection."""
    _validate(m)
    if tol is None:
        tol = default_tolerance(m)
    if not tol > 0:
        raise InvalidArgumentError(f"tol must be positive, got {tol}")
    d, e = m.diag, m.offdiag
    values = []
    bounds = np.concatenate(([0], _split_points(d, e), [d.size]))
    for start, stop in zip(bounds[:-1], bounds[1:]):
        db, eb = d[start:stop], e[start:stop - 1]
        if db.size == 1:
            values.append(db.copy())
        else:
            values.append(_bisect(db, eb, np.arange(db.size), tol))
    return Spectrum(np.concatenate(values), ensemble_tag=m.tag, seed=m.seed)


def top_k_eigenvalues(m: TridiagonalSymmetric, k: int, tol: float | None = None) -> np.ndarray:
    """The ``k`` largest eigenvalues, in decreasing order."""
    _validate(m)
    if not 1 <= k <= m.n:
        raise InvalidArgumentError(f"k must lie in [1, {m.n}], got {k}")
    if tol is None:
        tol = default_tolerance(m)
    if not tol > 0:
        raise InvalidArgumentError(f"tol must be positive, got {tol}")
    if m.n == 1:
        return m.diag.copy()
    ks = np.arange(m.n - 1, m.n - 1 - k, -1)
    return _bisect(m.diag, m.offdiag, ks, tol)


def householder_tridiagonalize(m: DenseSymmetric) -> TridiagonalSymmetric:
    """Orthogonally similar tridiagonal form via Householder reflections.

    Off-diagonal signs are dropped: flipping them is a diagonal similarity.
    """
    a = np.array(m.entries, dtype=float, copy=True)
    if not np.all(np.isfinite(a)):
        raise InvalidMatrixError("matrix has non-finite entries")
    n = a.shape[0]
    diag = np.empty(n)
    off = np.empty(max(n - 1, 0))
    for k in range(n - 2):
        x = a[k + 1:, k]
        sigma = float(np.dot(x, x))
        diag[k] = a[k, k]
        if sigma == 0.0:
            off[k] = 0.0
            continue
        alpha = -np.copysign(np.sqrt(sigma), x[0])
        v = x.copy()
        v[0] -= alpha
        beta = 2.0 / float(np.dot(v, v))
        sub = a[k + 1:, k + 1:]
        p = beta * (sub @ v)
        w = p - (0.5 * beta * float(np.dot(v, p))) * v
        sub -= np.outer(v, w) + np.outer(w, v)
        off[k] = alpha
    if n >= 2:
        diag[n - 2] = a[n - 2, n - 2]
        off[n - 2] = a[n - 1, n - 2]
    diag[n - 1] = a[n - 1, n - 1]
    return TridiagonalSymmetric(diag, np.abs(off), seed=m.seed, tag="dense-goe")


def eigenvalues_dense(m: DenseSymmetric, tol: float | None = None) -> Spectrum:
    """All eigenvalues of a dense symmetric matrix.

    ``tol`` is absolute; by default it scales with the spectral radius.
    """
    if tol is not None and not tol > 0:
        raise InvalidArgumentError(f"tol must be positive, got {tol}")
    if m.n == 1:
        return Spectrum(m.entries.ravel(), ensemble_tag="dense-goe", seed=m.seed)
    return eigenvalues_tridiagonal(householder_tridiagonalize(m), tol)
