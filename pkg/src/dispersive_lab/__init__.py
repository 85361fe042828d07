"""Numerical laboratory for maximal estimates of dispersive propagators exp(i t phi(D))."""

__version__ = "0.1.0"
