"""Walk through one free-energy evaluation.

Samples a GOE spectrum, locates the saddle, evaluates the contour integral
and prints how N F_N splits into its three pieces.  Two closed forms are
shown alongside: the zero matrix (F_N = 0) and N = 2, where the partition
function is a modified Bessel function.

Usage:  python3 demos/free_energy_walkthrough.py [n] [beta]
"""

import math
import sys

import numpy as np

from ssklab.eigensolve import Spectrum, eigenvalues_tridiagonal
from ssklab.errors import QuadratureFailure
from ssklab.free_energy import free_energy, limiting_free_energy
from ssklab.sampling import SeedSpec, sample_tridiagonal


def show(label, fe):
    q = fe.quad
    print(f"{label}")
    print(f"  N F_N            {fe.n_f: .12f}")
    print(f"    prefactor      {fe.prefactor_log: .12f}")
    print(f"    N G(gamma)/2   {fe.g_saddle_half_n: .12f}")
    print(f"    log I          {fe.contour_log: .12f}")
    print(f"  saddle gamma     {fe.saddle.gamma:.12f}  (lambda_1 + {fe.saddle.offset:.3e})")
    print(f"  |G'(gamma)|      {abs(fe.saddle.residual):.2e}")
    print(f"  quadrature       {q.points_used} points, rel. error {q.refinement_error:.1e}, tail {q.tail_bound:.1e}"
          + ("" if q.bend_height is None else f", bent at height {q.bend_height:.3g}"))


def main(n=500, beta=1.0):
    s = eigenvalues_tridiagonal(sample_tridiagonal(n, SeedSpec(1, 0)))
    fe = free_energy(s, beta)
    show(f"GOE sample, n={n}, beta={beta}", fe)
    print(f"  F_N - f(beta)    {fe.f_n - limiting_free_energy(beta): .3e}")
    print()

    show(f"zero matrix, n={n}", free_energy(Spectrum(np.zeros(n)), beta))
    print()

    two = free_energy(Spectrum(np.array([1.0, -1.0])), beta)
    exact = 0.5 * math.log(np.i0(beta))
    print(f"n=2, eigenvalues +-1: contour {two.f_n:.15f}, Bessel {exact:.15f}, diff {two.f_n - exact:.1e}")

    # off the saddle the integral cancels down to exp(-N(G(a) - G(gamma))/2)
    # of its integrand's size; far enough out nothing survives rounding
    print()
    for off in (0.05, 0.2, 0.5):
        try:
            shifted = free_energy(s, beta, line_offset=off, saddle=fe.saddle)
        except QuadratureFailure as exc:
            print(f"line moved by {off}: refused ({exc})")
            continue
        flag = " (rounding-limited)" if shifted.quad.floor_limited else ""
        print(f"line moved by {off}: N F_N changes by {n * (shifted.f_n - fe.f_n):.2e}{flag}")


if __name__ == "__main__":
    args = sys.argv[1:]
    main(int(args[0]) if args else 500, float(args[1]) if len(args) > 1 else 1.0)
