"""The function G(z) = beta z - (1/N) sum log(z - lambda_i) and its real saddle.

On (lambda_1, inf) the map gamma -> (1/N) sum 1/(gamma - lambda_i) falls
monotonically from +inf to 0, so G'(gamma) = 0 has exactly one root there.
The root is found in the shifted variable u = gamma - lambda_1, which keeps
full relative precision when the saddle hugs the top eigenvalue.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .eigensolve import Spectrum
from .errors import InvalidArgumentError, PoleError, RegimeMisuseError, SolverFailure
from .spectral import semicircle_stieltjes

MAX_ITERATIONS = 200


@dataclass(frozen=True)
class SaddleInfo:
    """Saddle point of G on the real axis right of the spectrum.

    Attributes
    ----------
    gamma : float
        Saddle location, strictly above lambda_1.
    offset : float
        gamma - lambda_1, kept separately because it can be far below the
        resolution of gamma itself.
    delta : float
        N^{2/3} (gamma - lambda_1).
    bracket : tuple
        Final (lo, hi) interval in gamma that straddles the root.
    residual : float
        |G'(gamma)| evaluated at the returned point.
    """

    gamma: float
    offset: float
    g_at_gamma: float
    g2: float
    g3: float
    delta: float
    bracket: tuple
    iterations: int
    residual: float
    beta: float
    tol: float


def _check_beta(beta):
    if not (beta > 0 and math.isfinite(beta)):
        raise InvalidArgumentError(f"beta must be positive and finite, got {beta}")


def _shift(s: Spectrum, z):
    diff = z - s.eigenvalues
    if np.any(diff == 0):
        raise PoleError(f"z = {z} coincides with an eigenvalue")
    return diff


def g_value(s: Spectrum, beta: float, z):
    """G(z) on the principal branch; real for real z > lambda_1."""
    diff = _shift(s, z)
    if np.isrealobj(diff) and np.all(diff > 0):
        return float(beta * z - np.mean(np.log(diff)))
    return complex(beta * z - np.mean(np.log(diff.astype(complex))))


def g_derivative(s: Spectrum, beta: float, z, k: int = 1):
    """k-th derivative of G, for k = 1..4.

    G^{(k)}(z) = beta [k = 1] + (-1)^k (k-1)! (1/N) sum (z - lambda_i)^{-k}.
    """
    if k not in (1, 2, 3, 4):
        raise InvalidArgumentError(f"derivative order must be 1..4, got {k}")
    diff = _shift(s, z)
    val = (-1) ** k * math.factorial(k - 1) * np.mean(diff ** (-k))
    if k == 1:
        val = beta + val
    return complex(val) if np.iscomplexobj(val) else float(val)


def _moments(d, u):
    """(1/N) sum (u + d_i)^{-k} for k = 1, 2, 3."""
    w = 1.0 / (u + d)
    w2 = w * w
    return float(np.mean(w)), float(np.mean(w2)), float(np.mean(w2 * w))


def find_saddle(s: Spectrum, beta: float, tol: float | None = None) -> SaddleInfo:
    """Locate the unique gamma > lambda_1 with G'(gamma) = 0.

    The root of phi(u) = (1/N) sum 1/(u + d_i) - beta, d_i = lambda_1 - lambda_i,
    is bracketed in closed form: the i = 1 term alone gives phi(1/(N beta)) >= 0,
    Jensen gives phi(1/beta - mean d) >= 0, and phi(1/beta) <= 0. Since phi is
    convex and decreasing, Newton started from the left end climbs to the root
    without overshooting; a bisection step is taken whenever an iterate would
    leave the current bracket.
    """
    _check_beta(beta)
    if tol is None:
        tol = 1e-12 * max(1.0, beta)
    if not tol > 0:
        raise InvalidArgumentError(f"tol must be positive, got {tol}")
    lam1 = s.lambda1
    d = lam1 - s.eigenvalues
    n = s.n

    lo = max(1.0 / (n * beta), 1.0 / beta - float(np.mean(d)))
    hi = 1.0 / beta
    u = lo
    it = 0
    m1 = m2 = 0.0
    while True:
        m1, m2, _ = _moments(d, u)
        phi = m1 - beta
        if abs(phi) <= tol:
            break
        if phi > 0:
            lo = max(lo, u)
        else:
            hi = min(hi, u)
        if it >= MAX_ITERATIONS:
            raise SolverFailure(
                f"saddle search did not converge in {MAX_ITERATIONS} steps (|G'| = {abs(phi):.3e})"
            )
        it += 1
        step = u + phi / m2
        if not lo <= step <= hi or step == u:
            step = 0.5 * (lo + hi)
            if step in (lo, hi):
                # bracket exhausted at machine resolution
                break
        u = step

    m1, m2, m3 = _moments(d, u)
    residual = abs(beta - m1)
    gamma = lam1 + u
    g = beta * gamma - float(np.mean(np.log(u + d)))
    return SaddleInfo(
        gamma=gamma,
        offset=u,
        g_at_gamma=g,
        g2=m2,
        g3=-2.0 * m3,
        delta=n ** (2.0 / 3.0) * u,
        bracket=(lam1 + lo, lam1 + hi),
        iterations=it,
        residual=residual,
        beta=float(beta),
        tol=float(tol),
    )


def surrogate_saddle_ht(beta: float) -> float:
    """Root of beta + m_sc(gamma) = 0, namely (beta^2 + 1)/beta, for beta <= 1."""
    if not 0 < beta <= 1:
        raise RegimeMisuseError(f"high-temperature surrogate needs 0 < beta <= 1, got {beta}")
    return (beta * beta + 1.0) / beta


def surrogate_saddle_ht_clamped(beta: float, s_cut: float, n: int) -> float:
    if not s_cut > 0:
        raise InvalidArgumentError(f"s_cut must be positive, got {s_cut}")
    return max(surrogate_saddle_ht(beta), 2.0 + s_cut * n ** (-2.0 / 3.0))


def surrogate_saddle_lt(s: Spectrum, beta: float) -> float:
    """lambda_1 + 1/(N (beta - 1)), the low-temperature saddle approximation."""
    if not beta - 1.0 >= 1e-8:
        raise RegimeMisuseError(f"low-temperature surrogate needs beta - 1 >= 1e-8, got {beta}")
    return s.lambda1 + 1.0 / (s.n * (beta - 1.0))


def ht_surrogate_residual(beta: float) -> float:
    """|beta + m_sc(gamma_tilde)|, which vanishes identically."""
    return abs(beta + semicircle_stieltjes(surrogate_saddle_ht(beta)))
