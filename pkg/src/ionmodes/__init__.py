"""Gaussian ground-state entanglement of local motional modes in trapped-ion
chains and of the vacuum of a massive scalar field on a 1D lattice.

The covariance-matrix convention throughout is the interleaved quadrature
basis (phi_1, pi_1, ..., phi_n, pi_n) with the vacuum equal to the identity.
"""

from ionmodes.numerics import NumericalError

__version__ = "0.1.0"

__all__ = ["NumericalError", "__version__"]
