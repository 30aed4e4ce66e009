"""Numerical laboratory for p-capacitary potentials on warped products."""

__version__ = "0.1.0"
