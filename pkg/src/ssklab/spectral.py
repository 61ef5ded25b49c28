"""Semicircle law, classical eigenvalue locations and edge rigidity checks."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .eigensolve import Spectrum
from .errors import BranchUndefinedError, InvalidArgumentError


def semicircle_density(E):
    """(1/2pi) sqrt(4 - E^2) on [-2, 2], zero outside."""
    E = np.asarray(E, dtype=float)
    out = np.sqrt(np.clip(4.0 - E * E, 0.0, None)) / (2.0 * np.pi)
    return out if out.ndim else float(out)


def semicircle_cdf_from_right(E):
    """Semicircle mass of [E, 2]."""
    E = np.clip(np.asarray(E, dtype=float), -2.0, 2.0)
    out = 0.5 - (E * np.sqrt(4.0 - E * E) / 4.0 + np.arcsin(E / 2.0)) / np.pi
    return out if out.ndim else float(out)


def semicircle_stieltjes(z):
    """m_sc(z) = (-z + sqrt(z^2 - 4)) / 2, on the branch that vanishes at infinity.

    Defined off the cut (-2, 2); the endpoints return their limits -1 and 1.
    """
    z = complex(z)
    if z.imag == 0.0:
        x = z.real
        if -2.0 < x < 2.0:
            raise BranchUndefinedError(f"real argument {x} lies on the cut [-2, 2]")
        # at the endpoints the limit from outside the cut, m_sc(+-2) = -+1;
        # the real branch carries sign(x) and (x-2)(x+2) avoids cancellation
        r = math.sqrt(abs((x - 2.0) * (x + 2.0)))
        return -2.0 / (x + math.copysign(r, x))
    # sqrt(z - 2) sqrt(z + 2) is analytic off [-2, 2] and ~ z at infinity
    s = np.sqrt(z - 2.0) * np.sqrt(z + 2.0)
    return complex(-2.0 / (z + s))


def classical_locations(n: int) -> np.ndarray:
    """All N-quantiles gamma_1 > ... > gamma_N of the semicircle law.

    With E = 2 cos(phi/2) the mass of [E, 2] is (phi - sin phi) / (2 pi), so
    each location solves a Kepler equation phi - sin phi = 2 pi i / N, which
    Newton handles well even at the spectral edges.
    """
    if n < 1:
        raise InvalidArgumentError(f"n must be positive, got {n}")
    target = 2.0 * np.pi * np.arange(1, n + 1) / n
    lo = np.zeros(n)
    hi = np.full(n, 2.0 * np.pi)
    phi = np.minimum(np.cbrt(6.0 * target), 2.0 * np.pi)
    for _ in range(100):
        f = phi - np.sin(phi) - target
        lo = np.where(f < 0, phi, lo)
        hi = np.where(f > 0, phi, hi)
        fp = 1.0 - np.cos(phi)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = np.where(fp > 0, f / fp, np.inf)
        new = phi - step
        bad = ~((new > lo) & (new < hi))
        new = np.where(bad, 0.5 * (lo + hi), new)
        if np.all(np.abs(new - phi) <= 1e-15 * np.maximum(1.0, phi)):
            phi = new
            break
        phi = new
    gam = 2.0 * np.cos(phi / 2.0)
    gam[-1] = -2.0
    return gam


def classical_location(i: int, n: int) -> float:
    if not 1 <= i <= n:
        raise InvalidArgumentError(f"index must lie in [1, {n}], got {i}")
    target = 2.0 * np.pi * i / n
    if i == n:
        return -2.0
    lo, hi = 0.0, 2.0 * np.pi
    phi = min(np.cbrt(6.0 * target), 2.0 * np.pi)
    for _ in range(100):
        f = phi - math.sin(phi) - target
        if f < 0:
            lo = phi
        elif f > 0:
            hi = phi
        else:
            break
        fp = 1.0 - math.cos(phi)
        new = phi - f / fp if fp > 0 else 0.5 * (lo + hi)
        if not lo < new < hi:
            new = 0.5 * (lo + hi)
        if abs(new - phi) <= 1e-16 * max(1.0, phi):
            phi = new
            break
        phi = new
    return 2.0 * math.cos(phi / 2.0)


def empirical_stieltjes(s: Spectrum, z) -> complex:
    """m_N(z) = (1/N) sum_j 1 / (lambda_j - z)."""
    diff = s.eigenvalues - z
    if np.any(diff == 0):
        raise BranchUndefinedError(f"z = {z} is an eigenvalue")
    val = np.mean(1.0 / diff)
    return complex(val) if np.iscomplexobj(val) else float(val)


@dataclass(frozen=True)
class RigidityParams:
    xi: float = 0.3
    K: int = 20
    A: float = 6.0
    b: float = 0.05
    D: float = 12.0

    def __post_init__(self):
        for name in ("xi", "K", "A", "b", "D"):
            if not getattr(self, name) > 0:
                raise InvalidArgumentError(f"{name} must be positive")


@dataclass(frozen=True)
class RigidityReport:
    f_xi_ok: bool
    g_ka_ok: bool
    s_b_ok: bool
    j_d_ok: bool
    worst_f_xi_index: int
    worst_f_xi_ratio: float
    worst_g_ka_excess: float
    lambda1_scaled: float
    j_d_value: float
    gap_value: float
    xi_sum: float

    @property
    def all_ok(self) -> bool:
        return self.f_xi_ok and self.g_ka_ok and self.s_b_ok and self.j_d_ok


def rigidity_report(s: Spectrum, p: RigidityParams | None = None) -> RigidityReport:
    """Evaluate the four eigenvalue-position events on one spectrum.

    ``worst_g_ka_excess`` is the largest |N^{2/3}(lambda_j - 2) + (3 pi j/2)^{2/3}|
    minus its allowance j^{2/3}/10 over K <= j <= N^{2/5}; it is -inf when
    that index range is empty.
    """
    p = p or RigidityParams()
    lam = s.eigenvalues
    n = s.n
    n23 = n ** (2.0 / 3.0)

    idx = np.arange(1, n + 1)
    gam = classical_locations(n)
    ratio = np.abs(lam - gam) * n23 * np.minimum(idx, n + 1 - idx) ** (1.0 / 3.0) / n**p.xi
    worst = int(np.argmax(ratio))
    f_ok = bool(ratio[worst] <= 1.0)

    lambda1_scaled = n23 * (lam[0] - 2.0)
    j_hi = int(math.floor(n ** 0.4))
    excess = -math.inf
    if p.K <= j_hi:
        js = np.arange(p.K, j_hi + 1)
        dev = np.abs(n23 * (lam[js - 1] - 2.0) + (1.5 * np.pi * js) ** (2.0 / 3.0))
        excess = float(np.max(dev - js ** (2.0 / 3.0) / 10.0))
    g_ok = bool(excess <= 0.0 and lambda1_scaled <= p.A)

    if n >= 2:
        gap = n23 * (lam[0] - lam[1])
        with np.errstate(divide="ignore"):
            xi_sum = float(np.sum(1.0 / (lam[1:] - lam[0]))) / n
        j_val = n ** (1.0 / 3.0) * abs(1.0 + xi_sum)
    else:
        gap, xi_sum, j_val = math.inf, 0.0, n ** (1.0 / 3.0)
    return RigidityReport(
        f_xi_ok=f_ok,
        g_ka_ok=g_ok,
        s_b_ok=bool(gap > p.b),
        j_d_ok=bool(j_val <= p.D),
        worst_f_xi_index=worst + 1,
        worst_f_xi_ratio=float(ratio[worst]),
        worst_g_ka_excess=excess,
        lambda1_scaled=float(lambda1_scaled),
        j_d_value=float(j_val),
        gap_value=float(gap),
        xi_sum=xi_sum,
    )
