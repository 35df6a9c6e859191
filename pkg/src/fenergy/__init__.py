"""Numerical checks for F-energy functionals of bundle-valued forms."""

__version__ = "0.1.0"
