"""Vectorized adaptive Simpson quadrature."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import QuadratureFailure


@dataclass
class SimpsonResult:
    value: float
    error: float
    points: int


def adaptive_simpson(f, a: float, b: float, tol: float, h0: float, max_points: int = 2_000_000,
                     min_width: float = 0.0) -> SimpsonResult:
    """Integrate ``f`` over [a, b] to absolute accuracy ``tol``.

    ``f`` maps a 1-d array of abscissae to values.  The interval starts as
    panels of width about ``2 h0``; every panel whose two-level Simpson
    difference exceeds its share of ``tol`` (proportional to its width) is
    halved, all panels of one level being processed in a single call to ``f``.
    Accepted panels get the Richardson correction (S2 - S1) / 15.
    """
    if not b > a:
        return SimpsonResult(0.0, 0.0, 0)
    length = b - a
    m = max(1, int(np.ceil(length / (2.0 * h0))))
    left = a + length * np.arange(m) / m
    right = a + length * np.arange(1, m + 1) / m
    right[-1] = b
    mid = 0.5 * (left + right)
    x0 = np.concatenate((left, [b], mid))
    y0 = f(x0)
    fl, fr, fm = y0[:m], y0[1:m + 1], y0[m + 1:]
    points = x0.size

    total = 0.0
    err = 0.0
    while left.size:
        w = right - left
        q1 = left + 0.25 * w
        q3 = right - 0.25 * w
        yq = f(np.concatenate((q1, q3)))
        points += yq.size
        k = left.size
        f1, f3 = yq[:k], yq[k:]
        s1 = w / 6.0 * (fl + 4.0 * fm + fr)
        s2 = w / 12.0 * (fl + 4.0 * f1 + 2.0 * fm + 4.0 * f3 + fr)
        diff = np.abs(s2 - s1) / 15.0
        ok = (diff <= tol * w / length) | (w <= min_width)
        total += float(np.sum(s2[ok] + (s2[ok] - s1[ok]) / 15.0))
        err += float(np.sum(diff[ok]))
        bad = ~ok
        if not np.any(bad):
            break
        if points > max_points:
            raise QuadratureFailure(
                f"adaptive Simpson exceeded {max_points} points (estimated error {err + diff[bad].sum():.3e}, tol {tol:.3e})"
            )
        lb, rb, mb = left[bad], right[bad], mid[bad]
        left = np.concatenate((lb, mb))
        right = np.concatenate((mb, rb))
        mid = np.concatenate((q1[bad], q3[bad]))
        fl, fr, fm = (
            np.concatenate((fl[bad], fm[bad])),
            np.concatenate((fm[bad], fr[bad])),
            np.concatenate((f1[bad], f3[bad])),
        )
    return SimpsonResult(total, err, points)
