"""Numerical verification toolkit for wave equations with an inverse-square potential."""

__version__ = "0.1.0"
