"""Per-sample fluctuation statistics, Monte Carlo experiments and goodness-of-fit tools."""

from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Iterator, Sequence

import numpy as np
from scipy import stats
from scipy.special import ndtr

from .eigensolve import Spectrum, eigenvalues_dense, eigenvalues_tridiagonal
from .errors import DegenerateInputError, InvalidArgumentError, InvalidDimensionError, SSKError
from .free_energy import (
    HT_BETA_SLACK,
    LT_BETA_MARGIN,
    free_energy,
    ht_expansion_residual,
    limiting_free_energy,
    lt_expansion_residual,
)
from .sampling import SeedSpec, sample_goe_dense, sample_tridiagonal

ENSEMBLES = ("tridiagonal", "dense-goe")


def beta_from_alpha(alpha: float, n: int) -> float:
    """beta = 1 + alpha sqrt(log N) N^{-1/3}."""
    return 1.0 + alpha * math.sqrt(math.log(n)) * n ** (-1.0 / 3.0)


def alpha_from_beta(beta: float, n: int) -> float:
    return (beta - 1.0) * n ** (1.0 / 3.0) / math.sqrt(math.log(n))


def regime_tag(alpha: float) -> str:
    if alpha <= -0.5:
        return "high"
    if alpha >= 0.5:
        return "low"
    return "critical"


def x_q_statistic(s: Spectrum, q: float) -> float:
    """sum_i log|2 + Q N^{-2/3} - lambda_i| - N/2 - N^{1/3} Q + log(N)/6."""
    if not q > 0:
        raise InvalidArgumentError(f"q must be positive, got {q}")
    n = s.n
    x = 2.0 + q * n ** (-2.0 / 3.0)
    diff = np.abs(x - s.eigenvalues)
    if np.any(diff == 0):
        raise DegenerateInputError(f"evaluation point {x} coincides with an eigenvalue")
    return float(np.sum(np.log(diff))) - n / 2.0 - n ** (1.0 / 3.0) * q + math.log(n) / 6.0


def y_statistic(f_n: float, beta: float, n: int) -> float:
    """(N (F_N - f(beta)) + log(N)/12) / sqrt(log(N)/6)."""
    if n < 3:
        raise InvalidDimensionError(f"Y_N needs n >= 3, got {n}")
    ln = math.log(n)
    return (n * (f_n - limiting_free_energy(beta)) + ln / 12.0) / math.sqrt(ln / 6.0)


def tw_statistic(f_n: float, beta: float, n: int) -> float:
    """(N (F_N - f(beta)) + log(N)/12) / (N^{1/3} (beta - 1)), for beta > 1."""
    if not beta > 1:
        raise InvalidArgumentError(f"the low-temperature statistic needs beta > 1, got {beta}")
    return (n * (f_n - limiting_free_energy(beta)) + math.log(n) / 12.0) / (n ** (1.0 / 3.0) * (beta - 1.0))


@dataclass
class FluctuationRecord:
    """Statistics of one (N, beta, Q, sample) cell.

    Fields that do not apply (tw_stat at beta <= 1, a residual outside its
    regime) are None.  A failed sample keeps its coordinates, has the error
    message in ``error`` and None in every computed field.
    """

    n: int
    beta: float
    alpha: float
    q: float
    sample_index: int
    base_seed: int
    ensemble: str = "tridiagonal"
    regime: str = "critical"
    f_n: float | None = None
    y_n: float | None = None
    x_q: float | None = None
    lambda1_scaled: float | None = None
    tw_stat: float | None = None
    ht_residual: float | None = None
    lt_residual: float | None = None
    error: str | None = None
    extra: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.error is None

    def to_dict(self) -> dict:
        d = asdict(self)
        extra = d.pop("extra")
        d.update(extra)
        return d


RECORD_FIELDS = tuple(f for f in FluctuationRecord.__dataclass_fields__ if f != "extra")


@dataclass(frozen=True)
class ExperimentManifest:
    """Everything that determines the output of :func:`run_experiment`.

    Exactly one of ``betas`` and ``alphas`` is given; alphas are converted per
    dimension.
    """

    base_seed: int
    n_grid: tuple
    m_samples: int
    betas: tuple | None = None
    alphas: tuple | None = None
    q_list: tuple = (5.0,)
    ensemble: str = "tridiagonal"
    budget: float = 1e-9
    output: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "n_grid", tuple(int(n) for n in self.n_grid))
        object.__setattr__(self, "q_list", tuple(float(q) for q in self.q_list))
        if (self.betas is None) == (self.alphas is None):
            raise InvalidArgumentError("give exactly one of betas and alphas")
        if self.betas is not None:
            object.__setattr__(self, "betas", tuple(float(b) for b in self.betas))
            if not self.betas or any(not b > 0 for b in self.betas):
                raise InvalidArgumentError("betas must be a nonempty list of positive values")
        else:
            object.__setattr__(self, "alphas", tuple(float(a) for a in self.alphas))
            if not self.alphas:
                raise InvalidArgumentError("alphas must be nonempty")
        if not self.n_grid or any(n < 3 for n in self.n_grid):
            raise InvalidArgumentError("n_grid must be nonempty with every n >= 3")
        if list(self.n_grid) != sorted(self.n_grid):
            raise InvalidArgumentError("n_grid must be sorted ascending")
        if self.m_samples < 1:
            raise InvalidArgumentError("m_samples must be positive")
        if not self.q_list or any(not q > 0 for q in self.q_list):
            raise InvalidArgumentError("q_list must be a nonempty list of positive values")
        if self.ensemble not in ENSEMBLES:
            raise InvalidArgumentError(f"ensemble must be one of {ENSEMBLES}")
        if not self.budget > 0:
            raise InvalidArgumentError("budget must be positive")
        SeedSpec(self.base_seed)

    def betas_for(self, n: int) -> tuple:
        if self.betas is not None:
            return self.betas
        return tuple(beta_from_alpha(a, n) for a in self.alphas)

    def to_dict(self) -> dict:
        return {
            "base_seed": self.base_seed,
            "n_grid": list(self.n_grid),
            "m_samples": self.m_samples,
            "betas": None if self.betas is None else list(self.betas),
            "alphas": None if self.alphas is None else list(self.alphas),
            "q_list": list(self.q_list),
            "ensemble": self.ensemble,
            "budget": self.budget,
            "output": self.output,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentManifest":
        d = dict(d)
        for key in ("betas", "alphas"):
            if d.get(key) is not None:
                d[key] = tuple(d[key])
        return cls(**d)

    @property
    def total_samples(self) -> int:
        return sum(len(self.betas_for(n)) * len(self.q_list) * self.m_samples for n in self.n_grid)


def sample_spectrum(n: int, seed: SeedSpec, ensemble: str = "tridiagonal") -> Spectrum:
    if ensemble == "tridiagonal":
        return eigenvalues_tridiagonal(sample_tridiagonal(n, seed))
    if ensemble == "dense-goe":
        return eigenvalues_dense(sample_goe_dense(n, seed))
    raise InvalidArgumentError(f"unknown ensemble {ensemble!r}")


def records_for_spectrum(s: Spectrum, betas: Sequence[float], q_list: Sequence[float], budget: float,
                         sample_index: int = 0, base_seed: int = 0, ensemble: str = "tridiagonal"):
    """All records of one spectrum, ordered by beta then q."""
    n = s.n
    out = []
    for beta in betas:
        alpha = alpha_from_beta(beta, n)
        base = dict(n=n, beta=beta, alpha=alpha, sample_index=sample_index, base_seed=base_seed,
                    ensemble=ensemble, regime=regime_tag(alpha))
        try:
            f_n = free_energy(s, beta, budget).f_n
        except (SSKError, ArithmeticError) as exc:
            out.extend(FluctuationRecord(q=q, error=f"{type(exc).__name__}: {exc}", **base) for q in q_list)
            continue
        for q in q_list:
            try:
                rec = FluctuationRecord(
                    q=q,
                    f_n=f_n,
                    y_n=y_statistic(f_n, beta, n),
                    x_q=x_q_statistic(s, q),
                    lambda1_scaled=n ** (2.0 / 3.0) * (s.lambda1 - 2.0),
                    tw_stat=tw_statistic(f_n, beta, n) if beta > 1 else None,
                    ht_residual=ht_expansion_residual(s, beta, q, f_n=f_n) if beta <= 1 + HT_BETA_SLACK else None,
                    lt_residual=lt_expansion_residual(s, beta, q, f_n=f_n) if beta - 1 >= LT_BETA_MARGIN else None,
                    **base,
                )
            except (SSKError, ArithmeticError) as exc:
                rec = FluctuationRecord(q=q, error=f"{type(exc).__name__}: {exc}", **base)
            out.append(rec)
    return out


def _sample_task(args):
    n, idx, manifest = args
    seed = SeedSpec(manifest.base_seed, idx)
    betas = manifest.betas_for(n)
    try:
        s = sample_spectrum(n, seed, manifest.ensemble)
    except (SSKError, ArithmeticError) as exc:
        msg = f"{type(exc).__name__}: {exc}"
        return [
            FluctuationRecord(n=n, beta=b, alpha=alpha_from_beta(b, n), q=q, sample_index=idx,
                              base_seed=manifest.base_seed, ensemble=manifest.ensemble,
                              regime=regime_tag(alpha_from_beta(b, n)), error=msg)
            for b in betas for q in manifest.q_list
        ]
    return records_for_spectrum(s, betas, manifest.q_list, manifest.budget, idx,
                                manifest.base_seed, manifest.ensemble)


def resolve_threads(threads: int | None = None) -> int:
    """Worker count: explicit value, else SSKLAB_THREADS, else 1; 0 means all cores."""
    if threads is None:
        threads = int(os.environ.get("SSKLAB_THREADS", "1"))
    if threads < 0:
        raise InvalidArgumentError(f"threads must be >= 0, got {threads}")
    return threads or (os.cpu_count() or 1)


def run_experiment(manifest: ExperimentManifest, threads: int | None = None) -> Iterator[FluctuationRecord]:
    """Yield records ordered by (n, beta, q, sample_index).

    Each sample depends only on (base_seed, sample_index), and results are
    reassembled in a fixed order, so the output does not depend on the
    number of workers.  Failed samples come back as error-tagged records.
    """
    workers = resolve_threads(threads)
    pool = ProcessPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        for n in manifest.n_grid:
            tasks = [(n, i, manifest) for i in range(manifest.m_samples)]
            if pool is None:
                results = map(_sample_task, tasks)
            else:
                results = pool.map(_sample_task, tasks, chunksize=max(1, len(tasks) // (8 * workers)))
            per_sample = list(results)
            n_cells = len(manifest.betas_for(n)) * len(manifest.q_list)
            for cell in range(n_cells):
                for recs in per_sample:
                    yield recs[cell]
    finally:
        if pool is not None:
            pool.shutdown()


def normal_cdf(x):
    return ndtr(x)


def ks_statistic(samples, cdf) -> float:
    """Kolmogorov-Smirnov distance between the sample and a distribution function.

    ``cdf`` must accept an array.
    """
    x = np.sort(np.asarray(samples, dtype=float))
    if x.size == 0:
        raise DegenerateInputError("no samples")
    if not np.all(np.isfinite(x)):
        raise DegenerateInputError("samples must be finite")
    m = x.size
    f = np.asarray(cdf(x), dtype=float)
    i = np.arange(1, m + 1)
    return float(max(np.max(i / m - f), np.max(f - (i - 1) / m)))


def ks_two_sample(a, b) -> float:
    return float(stats.ks_2samp(np.asarray(a, float), np.asarray(b, float)).statistic)


@dataclass(frozen=True)
class ReferenceTable:
    """Quantile table (level, value) of a continuous distribution."""

    name: str
    levels: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        lv = np.asarray(self.levels, dtype=float)
        va = np.asarray(self.values, dtype=float)
        if lv.shape != va.shape or lv.ndim != 1 or lv.size < 2:
            raise InvalidArgumentError("reference table needs at least two (level, value) rows")
        if np.any(lv <= 0) or np.any(lv >= 1):
            raise InvalidArgumentError("levels must lie strictly inside (0, 1)")
        if np.any(np.diff(lv) <= 0) or np.any(np.diff(va) <= 0):
            raise InvalidArgumentError("levels and values must be strictly increasing")
        object.__setattr__(self, "levels", lv)
        object.__setattr__(self, "values", va)

    def quantile(self, level: float) -> float:
        return float(np.interp(level, self.levels, self.values))


def load_reference_table(path, name: str | None = None) -> ReferenceTable:
    """Read a "level,value" CSV; lines starting with '#' are comments."""
    with open(path, encoding="utf-8", newline="") as fh:
        rows = [line for line in fh if line.strip() and not line.lstrip().startswith("#")]
    reader = csv.DictReader(rows)
    if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != ["level", "value"]:
        raise InvalidArgumentError(f"{path}: expected header 'level,value'")
    levels, values = [], []
    for row in reader:
        levels.append(float(row["level"]))
        values.append(float(row["value"]))
    return ReferenceTable(name or os.path.splitext(os.path.basename(str(path)))[0], np.array(levels), np.array(values))


def empirical_cdf_from_table(t: ReferenceTable, x):
    """Distribution function from a quantile table.

    Linear interpolation between rows; outside the table the tails decay
    exponentially with the slope of the outermost segment.  Returns
    ``(probability, extrapolated)``; both are arrays when ``x`` is.
    """
    xa = np.asarray(x, dtype=float)
    lv, va = t.levels, t.values
    p = np.interp(xa, va, lv)
    below = xa < va[0]
    above = xa > va[-1]
    k_lo = (lv[1] - lv[0]) / (va[1] - va[0]) / lv[0]
    k_hi = (lv[-1] - lv[-2]) / (va[-1] - va[-2]) / (1.0 - lv[-1])
    with np.errstate(over="ignore", under="ignore"):
        p = np.where(below, lv[0] * np.exp(k_lo * (xa - va[0])), p)
        p = np.where(above, 1.0 - (1.0 - lv[-1]) * np.exp(-k_hi * (xa - va[-1])), p)
    flag = below | above
    if xa.ndim == 0:
        return float(p), bool(flag)
    return p, flag


def moment_summary(samples):
    """Mean, unbiased variance and bias-corrected sample skewness.

    Skewness is nan for fewer than three samples or zero variance.
    """
    x = np.asarray(samples, dtype=float)
    m = x.size
    if m < 2:
        raise DegenerateInputError("need at least two samples")
    mean = float(np.mean(x))
    var = float(np.var(x, ddof=1))
    skew = math.nan
    if m >= 3:
        c = x - mean
        m2 = float(np.mean(c * c))
        if m2 > 0:
            g1 = float(np.mean(c**3)) / m2**1.5
            skew = g1 * math.sqrt(m * (m - 1)) / (m - 2)
    return mean, var, skew
