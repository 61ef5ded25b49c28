"""Numerical laboratory for the spherical Sherrington-Kirkpatrick model.

Free energies are computed exactly (to quadrature accuracy) from the spectrum
of the coupling matrix, and their fluctuations are studied by Monte Carlo
over GOE samples.
"""

__version__ = "0.1.0"
