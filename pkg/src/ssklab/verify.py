"""Acceptance checks, shared by ``ssklab verify`` and the test-suite.

Each check returns a :class:`CheckResult`.  The quick tier holds the
exactness and oracle checks (1-4); the full tier adds the spectral,
distributional and engineering checks.  Monte Carlo spectra are drawn from
fixed seeds and shared between checks through :class:`SampleBank`.
"""

from __future__ import annotations

import math
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .eigensolve import Spectrum, eigenvalues_dense, eigenvalues_tridiagonal
from .fluctuations import (
    ExperimentManifest,
    ReferenceTable,
    beta_from_alpha,
    empirical_cdf_from_table,
    ks_statistic,
    ks_two_sample,
    normal_cdf,
    run_experiment,
    tw_statistic,
    x_q_statistic,
    y_statistic,
)
from .free_energy import (
    free_energy,
    ht_expansion_residual,
    lt_expansion_residual,
    sphere_mc_free_energy,
)
from .persistence import write_records
from .saddle import find_saddle, g_derivative, g_value
from .sampling import SeedSpec, sample_goe_dense, sample_tridiagonal
from .spectral import RigidityParams, classical_locations, rigidity_report, semicircle_cdf_from_right

BANK_SEED = 20240611
MC_SEED = 7


@dataclass
class CheckResult:
    number: int
    name: str
    passed: bool
    detail: str
    values: dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.number:2d} {self.name}: {self.detail}"


class SampleBank:
    """Memoized GOE spectra and free energies drawn from one base seed."""

    def __init__(self, base_seed: int = BANK_SEED, budget: float = 1e-9):
        self.base_seed = base_seed
        self.budget = budget
        self._spectra: dict = {}
        self._fe: dict = {}
        self.max_saddle_ratio = 0.0

    def spectra(self, n: int, m: int) -> list:
        have = self._spectra.setdefault(n, [])
        for i in range(len(have), m):
            have.append(eigenvalues_tridiagonal(sample_tridiagonal(n, SeedSpec(self.base_seed, i))))
        return have[:m]

    def free_energies(self, n: int, m: int, beta: float) -> np.ndarray:
        key = (n, float(beta))
        have = self._fe.setdefault(key, [])
        specs = self.spectra(n, m)
        for s in specs[len(have):m]:
            fe = free_energy(s, beta, self.budget)
            self.max_saddle_ratio = max(self.max_saddle_ratio, fe.saddle.residual / fe.saddle.tol)
            have.append(fe.f_n)
        return np.array(have[:m])


def _timed(fn):
    def wrapper(*args, **kwargs):
        t0 = time.perf_counter()
        res = fn(*args, **kwargs)
        res.seconds = time.perf_counter() - t0
        return res
    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


@_timed
def check_exactness(bank: SampleBank | None = None) -> CheckResult:
    """Zero couplings give F_N = 0; a constant spectrum c gives beta c / 2."""
    t0 = time.perf_counter()
    worst = 0.0
    for n in (10, 100, 1000):
        for beta in (0.5, 1.0, 1.5):
            worst = max(worst, abs(free_energy(Spectrum(np.zeros(n)), beta).f_n))
    const_err = abs(free_energy(Spectrum(np.full(100, 0.7)), 1.3).f_n - 0.455)
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-8 and const_err <= 1e-8 and elapsed < 1.0
    return CheckResult(1, "exactness identities", ok,
                       f"max|F| zero={worst:.2e}, const err={const_err:.2e}, {elapsed:.2f}s (< 1 s)",
                       {"zero_err": worst, "const_err": const_err, "elapsed": elapsed})


@_timed
def check_sphere_oracle(bank: SampleBank | None = None, draws: int = 10_000_000) -> CheckResult:
    """Contour free energy against direct Monte Carlo over the sphere."""
    hits = 0
    zs = {}
    for n in (4, 6, 8):
        m = sample_goe_dense(n, SeedSpec(MC_SEED, n))
        s = eigenvalues_dense(m)
        for beta in (0.5, 1.0, 1.5):
            f = free_energy(s, beta).f_n
            est, se = sphere_mc_free_energy(m, beta, draws, SeedSpec(MC_SEED + 1, 100 * n + int(10 * beta)))
            z = (f - est) / se
            zs[(n, beta)] = z
            hits += abs(z) <= 3.0
    worst = max(abs(z) for z in zs.values())
    return CheckResult(2, "sphere Monte Carlo oracle", hits >= 8,
                       f"{hits}/9 cells within 3 SE (worst |z| = {worst:.2f})",
                       {"hits": hits, "z": zs})


@_timed
def check_line_invariance(bank: SampleBank | None = None) -> CheckResult:
    """Moving the integration line to gamma + 0.5 leaves N F_N unchanged."""
    worst = 0.0
    for i in range(20):
        s = eigenvalues_tridiagonal(sample_tridiagonal(100, SeedSpec(BANK_SEED + 1, i)))
        a = free_energy(s, 1.0)
        b = free_energy(s, 1.0, line_offset=0.5, saddle=a.saddle)
        worst = max(worst, abs(100 * (a.f_n - b.f_n)))
    return CheckResult(3, "contour-line invariance", worst < 1e-6,
                       f"max |delta N F_N| = {worst:.2e} over 20 samples (< 1e-6)", {"worst": worst})


@_timed
def check_saddle(bank: SampleBank | None = None) -> CheckResult:
    """Saddle residuals within tolerance and derivatives against finite differences."""
    bank = bank or SampleBank()
    ratio = bank.max_saddle_ratio
    betas = (0.1, 0.5, 0.9, 1.0, 1.1, 1.3, 2.0, 5.0)
    solves = 0
    for n in (10, 100, 1000, 4000):
        for s in bank.spectra(n, 3):
            for beta in betas:
                sad = find_saddle(s, beta)
                ratio = max(ratio, sad.residual / (1e-12 * max(1.0, beta)))
                solves += 1
    rng = np.random.default_rng(MC_SEED)
    fd_worst = 0.0
    for _ in range(20):
        s = Spectrum(rng.standard_normal(50))
        beta = float(rng.uniform(0.3, 3.0))
        z = complex(s.lambda1 + rng.uniform(0.2, 2.0), rng.uniform(-1.0, 1.0))
        scale = abs(z - s.lambda1)
        h = 1e-5 * scale
        prev = lambda w: g_value(s, beta, w)
        for k in range(1, 5):
            fd = (prev(z + h) - prev(z - h)) / (2 * h)
            exact = g_derivative(s, beta, z, k)
            fd_worst = max(fd_worst, abs(fd - exact) / max(abs(exact), 1e-300))
            prev = (lambda kk: (lambda w: g_derivative(s, beta, w, kk)))(k)
    ok = ratio <= 1.0 and fd_worst <= 1e-6
    return CheckResult(4, "saddle residual and derivatives", ok,
                       f"max |G'|/tol = {ratio:.2e} over {solves}+ solves, FD rel err {fd_worst:.1e}",
                       {"residual_ratio": ratio, "fd_rel": fd_worst})


@_timed
def check_ensembles(bank: SampleBank | None = None, m: int = 1000) -> CheckResult:
    """Top eigenvalue from the tridiagonal model and from dense GOE matrices agree in law."""
    tri = [eigenvalues_tridiagonal(sample_tridiagonal(200, SeedSpec(BANK_SEED + 2, i))).lambda1 for i in range(m)]
    dense = [eigenvalues_dense(sample_goe_dense(200, SeedSpec(BANK_SEED + 3, i))).lambda1 for i in range(m)]
    d = ks_two_sample(tri, dense)
    return CheckResult(5, "tridiagonal vs dense lambda_1", d <= 0.10, f"two-sample KS = {d:.4f} (<= 0.10)", {"ks": d})


@_timed
def check_semicircle(bank: SampleBank | None = None) -> CheckResult:
    bank = bank or SampleBank()
    s = bank.spectra(2000, 1)[0]
    ks = ks_statistic(s.eigenvalues, lambda x: 1.0 - semicircle_cdf_from_right(x))
    n = 1000
    gam = classical_locations(n)
    roundtrip = float(np.max(np.abs(semicircle_cdf_from_right(gam) - np.arange(1, n + 1) / n)))
    ref = (3 * np.pi / (2 * n)) ** (2 / 3)
    edge = abs(2 - gam[0] - ref)
    ok = ks <= 0.05 and roundtrip <= 1e-10 and edge <= 0.15 * ref
    return CheckResult(6, "semicircle law and classical locations", ok,
                       f"KS = {ks:.4f} (<= 0.05), round trip {roundtrip:.1e}, edge rel {edge / ref:.3f} (<= 0.15)",
                       {"ks": ks, "roundtrip": roundtrip, "edge_rel": edge / ref})


@_timed
def check_rigidity(bank: SampleBank | None = None, m: int = 500) -> CheckResult:
    bank = bank or SampleBank()
    p = RigidityParams()
    reps = [rigidity_report(s, p) for s in bank.spectra(1000, m)]
    frac = sum(r.all_ok for r in reps) / m
    by_event = {k: sum(getattr(r, k) for r in reps) / m for k in ("f_xi_ok", "g_ka_ok", "s_b_ok", "j_d_ok")}
    detail = f"{100 * frac:.1f}% pass all four (>= 99%); " + ", ".join(f"{k[:-3]} {100 * v:.1f}%" for k, v in by_event.items())
    return CheckResult(7, "rigidity events", frac >= 0.99, detail, {"fraction": frac, **by_event})


def _critical_stats(bank, n, m):
    f = bank.free_energies(n, m, 1.0)
    return np.array([y_statistic(x, 1.0, n) for x in f]), f


@_timed
def check_critical_clt(bank: SampleBank | None = None, n: int = 1000, m: int = 2000) -> CheckResult:
    bank = bank or SampleBank()
    ys, f = _critical_stats(bank, n, m)
    ks = ks_statistic(ys, normal_cdf)
    var_ratio = float(np.var(n * f + math.log(n) / 12, ddof=1) / (math.log(n) / 6))
    ok = ks <= 0.10 and 0.6 <= var_ratio <= 1.4
    return CheckResult(8, "critical free-energy CLT", ok,
                       f"KS(Y_N) = {ks:.4f} (<= 0.10), variance ratio {var_ratio:.3f} (in [0.6, 1.4]), "
                       f"mean Y_N {np.mean(ys):+.3f}",
                       {"ks": ks, "var_ratio": var_ratio, "mean_y": float(np.mean(ys))})


@_timed
def check_log_char_poly(bank: SampleBank | None = None, n: int = 1000, m: int = 2000) -> CheckResult:
    bank = bank or SampleBank()
    specs = bank.spectra(n, m)
    sd = math.sqrt(2 * math.log(n) / 3)
    ks = {}
    means = {}
    for q in (1.0, 5.0):
        x = np.array([x_q_statistic(s, q) for s in specs]) / sd
        ks[q] = ks_statistic(x, normal_cdf)
        means[q] = float(np.mean(x))
    ok = all(v <= 0.10 for v in ks.values())
    return CheckResult(9, "edge log-characteristic polynomial CLT", ok,
                       "; ".join(f"Q={q:g}: KS = {ks[q]:.4f}, mean {means[q]:+.3f}" for q in ks) + " (KS <= 0.10)",
                       {"ks": ks, "mean": means})


def _beta_lt(n):
    return beta_from_alpha(5.0, n)


def _median_residuals(bank, n, m, beta, which):
    specs = bank.spectra(n, m)
    f = bank.free_energies(n, m, beta)
    fn = ht_expansion_residual if which == "ht" else lt_expansion_residual
    return float(np.median([abs(fn(s, beta, 5.0, f_n=x)) for s, x in zip(specs, f)]))


@_timed
def check_ht_residual(bank: SampleBank | None = None, m: int = 200) -> CheckResult:
    bank = bank or SampleBank()
    small = _median_residuals(bank, 500, m, 1.0, "ht")
    large = _median_residuals(bank, 4000, m, 1.0, "ht")
    return CheckResult(10, "high-temperature expansion residual", large <= 2 * small + 1,
                       f"median |r|: n=500 {small:.3f}, n=4000 {large:.3f} (<= {2 * small + 1:.3f})",
                       {"median_500": small, "median_4000": large})


@_timed
def check_lt_residual(bank: SampleBank | None = None, m: int = 200) -> CheckResult:
    bank = bank or SampleBank()
    small = _median_residuals(bank, 500, m, _beta_lt(500), "lt")
    large = _median_residuals(bank, 4000, m, _beta_lt(4000), "lt")
    return CheckResult(11, "low-temperature expansion residual", large <= 2 * small + 1,
                       f"median |r|: n=500 {small:.3f}, n=4000 {large:.3f} (<= {2 * small + 1:.3f})",
                       {"median_500": small, "median_4000": large})


@_timed
def check_tracy_widom(bank: SampleBank | None = None, table: ReferenceTable | None = None,
                      n: int = 1000, m: int = 500) -> CheckResult:
    bank = bank or SampleBank()
    beta = _beta_lt(n)
    specs = bank.spectra(n, m)
    f = bank.free_energies(n, m, beta)
    tw = np.array([tw_statistic(x, beta, n) for x in f])
    l1 = np.array([n ** (2 / 3) * (s.lambda1 - 2) for s in specs])
    corr = float(np.corrcoef(tw, l1)[0, 1])
    ok = corr >= 0.9
    detail = f"corr(tw_stat, N^2/3(lambda_1 - 2)) = {corr:.4f} (>= 0.9)"
    values = {"corr": corr}
    if table is not None:
        ks = ks_statistic(l1, lambda x: empirical_cdf_from_table(table, x)[0])
        ok = ok and ks <= 0.15
        detail += f"; KS vs {table.name} = {ks:.4f} (<= 0.15)"
        values["ks_table"] = ks
    else:
        detail += "; no reference table supplied"
    return CheckResult(12, "Tracy-Widom regime", ok, detail, values)


@_timed
def check_gaussian_regime(bank: SampleBank | None = None, n: int = 1000, m: int = 1000) -> CheckResult:
    bank = bank or SampleBank()
    beta = beta_from_alpha(-0.5, n)
    f = bank.free_energies(n, m, beta)
    ys = np.array([y_statistic(x, beta, n) for x in f])
    ks = ks_statistic(ys, normal_cdf)
    return CheckResult(13, "Gaussian regime below the window", ks <= 0.12,
                       f"beta = {beta:.4f}, KS(Y_N) = {ks:.4f} (<= 0.12), mean Y_N {np.mean(ys):+.3f}",
                       {"ks": ks, "beta": beta, "mean_y": float(np.mean(ys))})


def saddle_bracket_holds(delta: float, n: int, beta: float, c: float = 20.0) -> bool:
    """1/(C(1 + x_+)) <= N^{2/3}(gamma - lambda_1) <= C(1 + y_+^2),
    x = N^{1/3}(beta - 1), y = N^{1/3}(1 - beta)."""
    x = n ** (1 / 3) * (beta - 1)
    lower = 1.0 / (c * (1 + max(x, 0.0)))
    upper = c * (1 + max(-x, 0.0) ** 2)
    return lower <= delta <= upper


@_timed
def check_saddle_bracket(bank: SampleBank | None = None, n: int = 1000, m: int = 500) -> CheckResult:
    bank = bank or SampleBank()
    betas = (0.9, 1.0, beta_from_alpha(1.1, n))
    specs = bank.spectra(n, m)
    frac = {}
    for beta in betas:
        frac[beta] = sum(saddle_bracket_holds(find_saddle(s, beta).delta, n, beta) for s in specs) / m
    ok = all(v >= 0.95 for v in frac.values())
    return CheckResult(14, "saddle location bracket", ok,
                       ", ".join(f"beta={b:.3f}: {100 * v:.1f}%" for b, v in frac.items()) + " (>= 95%)",
                       {"fraction": frac})


@_timed
def check_determinism(bank: SampleBank | None = None) -> CheckResult:
    man = ExperimentManifest(base_seed=11, n_grid=(50, 100), m_samples=6, alphas=(-1.0, 0.0, 2.0), q_list=(1.0, 5.0))
    blobs = []
    with tempfile.TemporaryDirectory() as tmp:
        for threads in (1, 2, 1):
            path = Path(tmp) / f"r{threads}_{len(blobs)}.jsonl"
            write_records(path, run_experiment(man, threads=threads))
            blobs.append(path.read_bytes())
    same = all(b == blobs[0] for b in blobs)
    return CheckResult(15, "determinism across thread counts", same,
                       f"{len(blobs)} runs (threads 1, 2, 1) byte-identical: {same}", {"identical": same})


@_timed
def check_performance(bank: SampleBank | None = None) -> CheckResult:
    """One n=2000 pipeline under 2 s; the n=1000, M=2000 workload projected onto 8 workers."""
    t0 = time.perf_counter()
    s = eigenvalues_tridiagonal(sample_tridiagonal(2000, SeedSpec(BANK_SEED + 4, 0)))
    fe = free_energy(s, 1.0)
    y_statistic(fe.f_n, 1.0, 2000)
    x_q_statistic(s, 5.0)
    ht_expansion_residual(s, 1.0, 5.0, f_n=fe.f_n)
    rigidity_report(s)
    t_2000 = time.perf_counter() - t0
    t0 = time.perf_counter()
    reps = 10
    for i in range(reps):
        s = eigenvalues_tridiagonal(sample_tridiagonal(1000, SeedSpec(BANK_SEED + 5, i)))
        fe = free_energy(s, 1.0)
        y_statistic(fe.f_n, 1.0, 1000)
        x_q_statistic(s, 1.0)
        x_q_statistic(s, 5.0)
    per = (time.perf_counter() - t0) / reps
    projected = per * 2000 / 8
    ok = t_2000 < 2.0 and projected < 1800
    return CheckResult(16, "performance", ok,
                       f"n=2000 pipeline {t_2000:.2f}s (< 2 s); n=1000 suite projected {projected / 60:.1f} min on 8 workers "
                       f"({per:.3f}s per sample, < 30 min)",
                       {"t_2000": t_2000, "per_sample_1000": per, "projected_s": projected})


QUICK = (check_exactness, check_sphere_oracle, check_line_invariance, check_saddle)
FULL = QUICK + (
    check_ensembles,
    check_semicircle,
    check_rigidity,
    check_critical_clt,
    check_log_char_poly,
    check_ht_residual,
    check_lt_residual,
    check_tracy_widom,
    check_gaussian_regime,
    check_saddle_bracket,
    check_determinism,
    check_performance,
)


def run_checks(tier: str = "quick", table: ReferenceTable | None = None, bank: SampleBank | None = None,
               report=None) -> list[CheckResult]:
    """Run a tier; ``report`` (if given) is called with each result as it finishes."""
    checks = {"quick": QUICK, "full": FULL}[tier]
    bank = bank or SampleBank()
    out = []
    for chk in checks:
        res = chk(bank, table=table) if chk is check_tracy_widom else chk(bank)
        out.append(res)
        if report is not None:
            report(res)
    return out
