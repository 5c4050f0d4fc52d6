"""BCS critical temperature, Ginzburg-Landau coefficients and a 1D lattice check
of the BCS-to-GL correspondence."""

__version__ = "0.1.0"
