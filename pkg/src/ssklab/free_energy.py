"""Free energy of the spherical model from the spectrum of its coupling matrix.

For a spectrum lambda_1 >= ... >= lambda_N and the saddle gamma of G,

    N F_N = log Gamma(N/2) - (N-2)/2 log(beta N) + (N/2 - 1) log 2
            + N G(gamma)/2 + log I,

    I = (1/pi) int_0^inf Re exp(N (G(gamma + it) - G(gamma))/2) dt.

The integral is positive and of order (N G''(gamma))^{-1/2}.  It is evaluated
by adaptive Simpson on the vertical line through the saddle.  When N is small
the integrand only decays like t^{-N/2} there, so above a height T the path
is bent onto the ray of angle 3 pi / 4, where the decay is exponential; by
analyticity the value is unchanged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .eigensolve import Spectrum
from .errors import (
    ContourEscapeError,
    InvalidArgumentError,
    InvalidDimensionError,
    OracleMisuseError,
    QuadratureFailure,
    RegimeMisuseError,
)
from .quadrature import adaptive_simpson
from .saddle import SaddleInfo, find_saddle
from .sampling import DenseSymmetric, SeedSpec, derive_stream

# integrand magnitude below which the path is cut off
TRUNCATION_LEVEL = 1e-18
_LOG_TRUNC = math.log(TRUNCATION_LEVEL)
_RAY = np.exp(0.75j * np.pi)
# evaluate integrands in blocks of this many points to bound memory
_CHUNK_ELEMS = 4_000_000
_ROUNDING_FLOOR = 8 * np.finfo(float).eps
# give up when rounding alone costs more than this relative accuracy
_MAX_FLOOR_REL = 1e-4
MC_MAX_DIM = 12
MC_MIN_SAMPLES = 10_000
HT_BETA_SLACK = 1e-9
LT_BETA_MARGIN = 1e-9


@dataclass(frozen=True)
class QuadratureDiagnostics:
    """Bookkeeping of one contour integral.

    ``tail_bound`` and ``refinement_error`` are relative to the integral.
    ``bend_height`` is None when the straight line sufficed; otherwise the
    path turns onto the ray at ``a + i bend_height`` and follows it for
    ``ray_length``.  ``floor_limited`` flags a line where cancellation put
    the budget below rounding, so the attained error exceeds the budget.
    """

    truncation_t: float
    points_used: int
    tail_bound: float
    refinement_error: float
    budget: float
    line_offset: float = 0.0
    bend_height: float | None = None
    ray_length: float = 0.0
    floor_limited: bool = False


@dataclass(frozen=True)
class FreeEnergyBreakdown:
    f_n: float
    prefactor_log: float
    g_saddle_half_n: float
    contour_log: float
    saddle: SaddleInfo
    quad: QuadratureDiagnostics

    @property
    def n_f(self) -> float:
        return self.prefactor_log + self.g_saddle_half_n + self.contour_log


def limiting_free_energy(beta: float) -> float:
    if not beta > 0:
        raise InvalidArgumentError(f"beta must be positive, got {beta}")
    if beta <= 1.0:
        return beta * beta / 4.0
    return beta - math.log(beta) / 2.0 - 0.75


def log_gamma_half(n: int) -> float:
    """log Gamma(n/2)."""
    if int(n) != n or n < 2:
        raise InvalidDimensionError(f"n must be an integer >= 2, got {n}")
    return math.lgamma(n / 2.0)


def prefactor(n: int, beta: float) -> float:
    """log Gamma(N/2) - (N-2)/2 log(beta N) + (N/2 - 1) log 2."""
    return log_gamma_half(n) - 0.5 * (n - 2) * math.log(beta * n) + (0.5 * n - 1.0) * math.log(2.0)


class _LineIntegrand:
    """exp(N (G(z) - G(a))/2) on the path a + it, then along the bent ray.

    Magnitude and phase are accumulated separately so no complex logarithm of
    a near-one argument is ever formed.
    """

    def __init__(self, lam, beta, a):
        self.lam = lam
        self.c = a - lam
        self.log_c = np.log(self.c)
        self.beta = beta
        self.a = a
        self.half_n = 0.5 * lam.size
        self.block = max(1, _CHUNK_ELEMS // lam.size)

    def _blocks(self, x, fn):
        out = np.empty(x.shape, dtype=complex)
        for i in range(0, x.size, self.block):
            out[i:i + self.block] = fn(x[i:i + self.block])
        return out

    def vertical_log(self, t):
        """log of the integrand at a + it, as complex (log-magnitude + i phase)."""
        def fn(tb):
            r = tb[:, None] / self.c[None, :]
            mag = -0.5 * np.mean(np.log1p(r * r), axis=1)
            ph = self.beta * tb - np.mean(np.arctan(r), axis=1)
            return self.half_n * (mag + 1j * ph)
        return self._blocks(np.asarray(t, dtype=float), fn)

    def ray_log(self, height, r):
        """log of the integrand at a + i height + r e^{3 pi i/4}."""
        def fn(rb):
            z = self.a + 1j * height + rb * _RAY
            x = z.real[:, None] - self.lam[None, :]
            y = z.imag[:, None]
            mag = self.beta * (z.real - self.a) - np.mean(np.log(np.hypot(x, y)) - self.log_c, axis=1)
            ph = self.beta * z.imag - np.mean(np.arctan2(np.broadcast_to(y, x.shape), x), axis=1)
            return self.half_n * (mag + 1j * ph)
        return self._blocks(np.asarray(r, dtype=float), fn)


def _find_cut(logmag, start, stop):
    """Smallest doubling of ``start`` with logmag below the cut, capped at ``stop``."""
    t = start
    while t < stop:
        if logmag(t) < _LOG_TRUNC:
            return t, True
        t *= 2.0
    return stop, logmag(stop) < _LOG_TRUNC


def contour_integral_log(s: Spectrum, beta: float, saddle: SaddleInfo, budget: float = 1e-9,
                         line_offset: float = 0.0, max_points: int = 2_000_000):
    """log I and its diagnostics.

    ``line_offset`` moves the vertical line to a = gamma + line_offset, which
    must stay right of lambda_1; the returned value still refers to I as
    normalized at the saddle, so it is independent of the offset up to
    quadrature error.  ``budget`` bounds the relative error of I, hence the
    absolute error of log I.
    """
    if not budget > 0:
        raise InvalidArgumentError(f"budget must be positive, got {budget}")
    lam = s.eigenvalues
    n = s.n
    a_off = saddle.offset + line_offset
    if not a_off > 0:
        raise InvalidArgumentError("the integration line must lie right of lambda_1")
    a = s.lambda1 + a_off
    d = s.lambda1 - lam
    # N (G(a) - G(gamma)) / 2, computed from offsets to keep precision
    shift = 0.5 * n * (beta * line_offset - float(np.mean(np.log(a_off + d) - np.log(saddle.offset + d))))

    integrand = _LineIntegrand(lam, beta, a)
    integrand.c = a_off + d
    integrand.log_c = np.log(integrand.c)
    g2 = float(np.mean(integrand.c ** -2.0))
    h0 = min(0.1, 1.0 / math.sqrt(n * g2))

    def vlogmag(t):
        return float(integrand.vertical_log(np.array([t]))[0].real)

    bend = max(8.0 / beta, 4.0 * float(integrand.c.max()))
    t_cut, reached = _find_cut(vlogmag, h0, bend)
    pieces = []
    vert = lambda t: np.exp(integrand.vertical_log(t)).real
    pieces.append((vert, 0.0, t_cut))
    ray_len = 0.0
    bend_height = None
    if not reached:
        bend_height = t_cut

        def rlogmag(r):
            return float(integrand.ray_log(bend_height, np.array([r]))[0].real)

        ray_len, ok = _find_cut(rlogmag, h0, 1e12)
        if not ok:
            raise ContourEscapeError("integrand did not decay along the bent path")

        def ray(r):
            return (np.exp(integrand.ray_log(bend_height, r)) * _RAY).imag

        pieces.append((ray, 0.0, ray_len))

    span = sum(hi - lo for _, lo, hi in pieces)
    points = 0

    def integrate(tol):
        nonlocal points
        total = err = 0.0
        for fn, lo, hi in pieces:
            res = adaptive_simpson(fn, lo, hi, tol * (hi - lo) / span, h0, max_points=max_points)
            total += res.value
            err += res.error
            points += res.points
        return total, err

    # a coarse pass sets the scale of I; refine until the tolerance is a
    # small fraction of the budget relative to the refined value
    total, err = integrate(1e-3 * h0)
    floor_limited = False
    for _ in range(5):
        scale = abs(total)
        tol = 0.1 * budget * scale
        # the integrand peaks at 1, so accuracy per unit length cannot beat
        # rounding; a shifted line can make I that small through cancellation
        floor = _ROUNDING_FLOOR * span
        if tol < floor:
            if floor > _MAX_FLOOR_REL * scale:
                raise QuadratureFailure(
                    f"cancellation on this line leaves no accuracy (|I| ~ {scale:.3e}, rounding floor {floor:.3e})"
                )
            tol, floor_limited = floor, True
        total, err = integrate(tol)
        if abs(total) >= 0.5 * scale:
            break
    value = total / math.pi
    if not value > 0:
        raise ContourEscapeError(f"contour integral evaluated to non-positive {value}")

    # tails beyond the cut, bounded by the local exponential rate of decay
    if bend_height is None:
        ct = t_cut / integrand.c
        rate = 0.5 * n * float(np.mean(ct / (integrand.c * (1.0 + ct * ct))))
        tail = math.exp(vlogmag(t_cut)) / max(rate, 1e-300)
    else:
        tail = math.exp(rlogmag(ray_len)) / (0.25 * n * beta)
    if floor_limited:
        # the refinement estimate cannot see rounding, so report the floor
        err = max(err, _ROUNDING_FLOOR * span)
    rel_err = err / abs(total)
    rel_tail = tail / abs(total)
    diag = QuadratureDiagnostics(
        truncation_t=float(t_cut if bend_height is None else bend_height + ray_len),
        points_used=int(points),
        tail_bound=float(rel_tail),
        refinement_error=float(rel_err),
        budget=float(budget),
        line_offset=float(line_offset),
        bend_height=bend_height,
        ray_length=float(ray_len),
        floor_limited=floor_limited,
    )
    return shift + math.log(value), diag


def free_energy(s: Spectrum, beta: float, budget: float = 1e-9, line_offset: float = 0.0,
                saddle: SaddleInfo | None = None) -> FreeEnergyBreakdown:
    """F_N(beta) for the coupling spectrum ``s``."""
    if not (beta > 0 and math.isfinite(beta)):
        raise InvalidArgumentError(f"beta must be positive and finite, got {beta}")
    n = s.n
    if n < 2:
        raise InvalidDimensionError("free energy needs n >= 2")
    if saddle is None:
        saddle = find_saddle(s, beta)
    pre = prefactor(n, beta)
    g_half = 0.5 * n * saddle.g_at_gamma
    clog, diag = contour_integral_log(s, beta, saddle, budget, line_offset)
    return FreeEnergyBreakdown(
        f_n=(pre + g_half + clog) / n,
        prefactor_log=pre,
        g_saddle_half_n=g_half,
        contour_log=clog,
        saddle=saddle,
        quad=diag,
    )


def sphere_mc_free_energy(m: DenseSymmetric, beta: float, m_samples: int, seed: SeedSpec,
                          chunk: int = 500_000):
    """Monte Carlo estimate of (1/N) log E exp(beta sigma^T M sigma / 2).

    sigma is uniform on the sphere of radius sqrt(N).  Returns the estimate
    and its delta-method standard error.  Meant for small N only, where the
    exponential moment is well sampled.
    """
    n = m.n
    if n > MC_MAX_DIM:
        raise OracleMisuseError(f"sphere Monte Carlo is limited to n <= {MC_MAX_DIM}, got {n}")
    if m_samples < MC_MIN_SAMPLES:
        raise OracleMisuseError(f"need at least {MC_MIN_SAMPLES} draws, got {m_samples}")
    rng = derive_stream(seed)
    a = np.asarray(m.entries, dtype=float)
    w = np.empty(m_samples)
    for i in range(0, m_samples, chunk):
        k = min(chunk, m_samples - i)
        g = rng.standard_normal((k, n))
        quad = np.einsum("ij,jk,ik->i", g, a, g)
        w[i:i + k] = 0.5 * beta * n * quad / np.einsum("ij,ij->i", g, g)
    wmax = float(w.max())
    e = np.exp(w - wmax)
    mean = float(e.mean())
    sd = float(e.std(ddof=1))
    est = (wmax + math.log(mean)) / n
    se = sd / (math.sqrt(m_samples) * mean * n)
    return est, se


@dataclass(frozen=True)
class ContourPolyline:
    """Upper half of the level curve Im G = 0 through the saddle.

    The lower half is the mirror image under conjugation.
    """

    E: np.ndarray
    eta: np.ndarray
    re_g: np.ndarray
    im_g: np.ndarray


def _im_g(lam, beta, E, eta):
    return beta * eta - np.mean(np.arctan2(eta[:, None], E[:, None] - lam[None, :]), axis=1)


def trace_descent_contour(s: Spectrum, beta: float, saddle: SaddleInfo, n_points: int = 200,
                          max_eta: float | None = None, geometric: bool = False,
                          min_eta: float | None = None) -> ContourPolyline:
    """Solve Im G(E + i eta) = 0 for E on a grid of heights eta.

    Im G increases strictly in E, is positive at E = gamma and tends to
    beta eta - pi as E -> -inf, so each height below pi/beta has one root left
    of gamma.  Heights come from a linear grid on (0, max_eta], or a
    geometric one on [min_eta, max_eta].
    """
    if n_points < 1:
        raise InvalidArgumentError("n_points must be positive")
    limit = math.pi / beta
    if max_eta is None:
        max_eta = 0.5 * limit
    if not 0 < max_eta < limit:
        raise ContourEscapeError(f"max_eta must lie in (0, pi/beta = {limit:.6g})")
    if geometric:
        lo = min_eta if min_eta is not None else max_eta * 1e-4
        eta = np.geomspace(lo, max_eta, n_points)
    else:
        eta = max_eta * np.arange(1, n_points + 1) / n_points
    lam = np.asarray(s.eigenvalues)
    gamma = saddle.gamma
    hi = np.full(eta.shape, gamma)
    step = np.full(eta.shape, max(saddle.offset, 1e-3))
    lo = hi - step
    for _ in range(200):
        neg = _im_g(lam, beta, lo, eta) < 0
        if np.all(neg):
            break
        step = np.where(neg, step, 2.0 * step)
        lo = np.where(neg, lo, hi - step)
    else:
        raise ContourEscapeError("could not bracket the descent contour")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        pos = _im_g(lam, beta, mid, eta) > 0
        hi = np.where(pos, mid, hi)
        lo = np.where(pos, lo, mid)
        if np.all(hi - lo <= 4e-16 * np.maximum(1.0, np.abs(mid))):
            break
    E = 0.5 * (lo + hi)
    z = E + 1j * eta
    g = beta * z - np.mean(np.log(z[:, None] - lam[None, :]), axis=1)
    return ContourPolyline(
        E=np.concatenate(([gamma], E)),
        eta=np.concatenate(([0.0], eta)),
        re_g=np.concatenate(([saddle.g_at_gamma], g.real)),
        im_g=np.concatenate(([0.0], _im_g(lam, beta, E, eta))),
    )


def ht_expansion_residual(s: Spectrum, beta: float, q: float = 5.0, budget: float = 1e-9,
                          f_n: float | None = None) -> float:
    """N (F_N - beta^2/4) + log(N)/12 + X_Q/2, for beta <= 1 (plus slack)."""
    from .fluctuations import x_q_statistic

    if beta > 1.0 + HT_BETA_SLACK:
        raise RegimeMisuseError(f"high-temperature residual needs beta <= 1, got {beta}")
    if f_n is None:
        f_n = free_energy(s, beta, budget).f_n
    n = s.n
    return n * (f_n - beta * beta / 4.0) + math.log(n) / 12.0 + 0.5 * x_q_statistic(s, q)


def lt_deterministic_part(n: int, beta: float) -> float:
    """Deterministic part of the low-temperature expansion of N (F_N - f)."""
    return -math.log(n) / 12.0 - 0.5 * math.log(n ** (1.0 / 3.0) * (beta - 1.0) + 1.0)


def lt_expansion_residual(s: Spectrum, beta: float, q: float = 5.0, budget: float = 1e-9,
                          f_n: float | None = None) -> float:
    """N (F_N - f(beta)) minus its expansion
    -X_Q/2 + (N/2)(beta - 1)(lambda_1 - 2) - log(N)/12 - log(N^{1/3}(beta - 1) + 1)/2.
    """
    from .fluctuations import x_q_statistic

    if not beta - 1.0 >= LT_BETA_MARGIN:
        raise RegimeMisuseError(f"low-temperature residual needs beta - 1 >= {LT_BETA_MARGIN}, got {beta}")
    if f_n is None:
        f_n = free_energy(s, beta, budget).f_n
    n = s.n
    f_lim = beta - 0.75 - 0.5 * math.log(beta)
    expansion = (
        -0.5 * x_q_statistic(s, q)
        + 0.5 * n * (beta - 1.0) * (s.lambda1 - 2.0)
        + lt_deterministic_part(n, beta)
    )
    return n * (f_n - f_lim) - expansion


def integrand_profile(s: Spectrum, beta: float, saddle: SaddleInfo, t) -> np.ndarray:
    """exp(N (G(gamma + it) - G(gamma))/2) at the heights ``t``."""
    integrand = _LineIntegrand(np.asarray(s.eigenvalues), beta, saddle.gamma)
    integrand.c = saddle.offset + (s.lambda1 - s.eigenvalues)
    return np.exp(integrand.vertical_log(np.asarray(t, dtype=float)))
