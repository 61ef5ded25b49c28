"""Compiled Sturm-sequence kernels for symmetric tridiagonal matrices.

The count recurrence is ``q_0 = d_0 - x``, ``q_i = d_i - x - e_{i-1}^2 / q_{i-1}``;
the number of negative ``q_i`` equals the number of eigenvalues below ``x``.
All probes advance one row at a time so the division in the inner loop
vectorizes across probes.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def count_below_many(d, e2, x, pivmin, q, counts):
    n = d.shape[0]
    m = x.shape[0]
    for j in range(m):
        v = d[0] - x[j]
        if abs(v) < pivmin:
            v = -pivmin
        q[j] = v
        counts[j] = 1 if v < 0.0 else 0
    for i in range(1, n):
        di = d[i]
        ei = e2[i - 1]
        for j in range(m):
            v = di - x[j] - ei / q[j]
            v = v if abs(v) >= pivmin else -pivmin
            q[j] = v
            counts[j] += 1 if v < 0.0 else 0


@njit(cache=True)
def bisect_indices(d, e2, ks, lo, hi, tol, pivmin, max_iter):
    """Bisect for the ks[j]-th smallest eigenvalue (0-based) of each probe.

    Returns midpoints of the final brackets and the number of sweeps used.
    """
    m = ks.shape[0]
    a = np.full(m, lo)
    b = np.full(m, hi)
    x = np.empty(m)
    q = np.empty(m)
    counts = np.empty(m, dtype=np.int64)
    sweeps = 0
    for _ in range(max_iter):
        active = False
        for j in range(m):
            mid = 0.5 * (a[j] + b[j])
            x[j] = mid
            if b[j] - a[j] > 2.0 * tol and a[j] < mid < b[j]:
                active = True
        if not active:
            break
        count_below_many(d, e2, x, pivmin, q, counts)
        sweeps += 1
        for j in range(m):
            if b[j] - a[j] > 2.0 * tol and a[j] < x[j] < b[j]:
                if counts[j] > ks[j]:
                    b[j] = x[j]
                else:
                    a[j] = x[j]
    return 0.5 * (a + b), sweeps
