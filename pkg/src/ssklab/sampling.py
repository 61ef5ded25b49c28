"""GOE samplers with deterministic, per-sample random streams.

Two ensembles are provided.  ``sample_goe_dense`` builds the full symmetric
matrix ``H_ij = -(g_ij + g_ji) / sqrt(2N)``; ``sample_tridiagonal`` draws the
orthogonally equivalent tridiagonal model (Dumitriu-Edelman, beta = 1), which
has the same eigenvalue law at O(N) sampling cost.

Every random draw goes through :func:`derive_stream`, so a sample is a pure
function of ``(base_seed, sample_index)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgumentError, InvalidDimensionError, InvalidMatrixError

# chi draws with at most this many degrees of freedom use an explicit sum of
# squared normals; larger ones go through the gamma sampler
CHI_DIRECT_MAX_DF = 32

_UINT64_MAX = (1 << 64) - 1


@dataclass(frozen=True)
class SeedSpec:
    base_seed: int
    sample_index: int = 0

    def __post_init__(self):
        if not 0 <= int(self.base_seed) <= _UINT64_MAX:
            raise InvalidArgumentError(f"base_seed must fit in 64 unsigned bits, got {self.base_seed}")
        if int(self.sample_index) < 0:
            raise InvalidArgumentError(f"sample_index must be nonnegative, got {self.sample_index}")


@dataclass(frozen=True)
class DenseSymmetric:
    entries: np.ndarray
    seed: SeedSpec | None = field(default=None, compare=False)

    def __post_init__(self):
        a = np.asarray(self.entries, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise InvalidMatrixError(f"expected a square matrix, got shape {a.shape}")
        if a.shape[0] < 1:
            raise InvalidDimensionError("empty matrix")
        object.__setattr__(self, "entries", a)

    @property
    def n(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True)
class TridiagonalSymmetric:
    diag: np.ndarray
    offdiag: np.ndarray
    seed: SeedSpec | None = field(default=None, compare=False)
    tag: str = field(default="tridiagonal", compare=False)

    def __post_init__(self):
        d = np.asarray(self.diag, dtype=float).ravel()
        e = np.asarray(self.offdiag, dtype=float).ravel()
        if d.size < 1:
            raise InvalidDimensionError("empty matrix")
        if e.size != d.size - 1:
            raise InvalidMatrixError(
                f"offdiag must have length n-1 = {d.size - 1}, got {e.size}"
            )
        if np.any(e < 0):
            raise InvalidMatrixError("offdiag entries must be nonnegative")
        object.__setattr__(self, "diag", d)
        object.__setattr__(self, "offdiag", e)

    @property
    def n(self) -> int:
        return self.diag.size

    def to_dense(self) -> np.ndarray:
        return np.diag(self.diag) + np.diag(self.offdiag, 1) + np.diag(self.offdiag, -1)


def derive_stream(seed: SeedSpec) -> np.random.Generator:
    """Return the random generator for one sample.

    The state is derived by numpy's ``SeedSequence`` hash from
    ``(base_seed, sample_index)``; streams for different indices are
    independent for all practical purposes and never overlap.
    """
    ss = np.random.SeedSequence(entropy=int(seed.base_seed), spawn_key=(int(seed.sample_index),))
    return np.random.Generator(np.random.PCG64(ss))


def derived_state_words(seed: SeedSpec, n_words: int = 4) -> np.ndarray:
    """Raw 64-bit words the stream is seeded with (exposed for mixing checks)."""
    ss = np.random.SeedSequence(entropy=int(seed.base_seed), spawn_key=(int(seed.sample_index),))
    return ss.generate_state(n_words, dtype=np.uint64)


def _check_dimension(n):
    if int(n) != n or n < 2:
        raise InvalidDimensionError(f"dimension must be an integer >= 2, got {n}")
    return int(n)


def sample_goe_dense(n: int, seed: SeedSpec) -> DenseSymmetric:
    n = _check_dimension(n)
    rng = derive_stream(seed)
    g = rng.standard_normal((n, n))
    # g + g.T is exactly symmetric: floating-point addition commutes
    h = -(g + g.T) / np.sqrt(2.0 * n)
    return DenseSymmetric(h, seed=seed)


def sample_chi(rng: np.random.Generator, df: np.ndarray) -> np.ndarray:
    """Draw one chi variate per entry of ``df`` (positive integers)."""
    df = np.asarray(df, dtype=np.int64)
    out = np.empty(df.shape, dtype=float)
    small = df <= CHI_DIRECT_MAX_DF
    if np.any(small):
        ks = df[small]
        z = rng.standard_normal((ks.size, CHI_DIRECT_MAX_DF))
        mask = np.arange(CHI_DIRECT_MAX_DF)[None, :] < ks[:, None]
        out[small] = np.sqrt(np.sum(np.where(mask, z * z, 0.0), axis=1))
    if np.any(~small):
        # numpy's standard_gamma is the Marsaglia-Tsang rejection sampler
        out[~small] = np.sqrt(2.0 * rng.standard_gamma(df[~small] / 2.0))
    return out


def sample_tridiagonal(n: int, seed: SeedSpec) -> TridiagonalSymmetric:
    n = _check_dimension(n)
    rng = derive_stream(seed)
    diag = rng.standard_normal(n) * np.sqrt(2.0 / n)
    df = np.arange(n - 1, 0, -1)
    offdiag = sample_chi(rng, df) / np.sqrt(n)
    return TridiagonalSymmetric(diag, offdiag, seed=seed)
