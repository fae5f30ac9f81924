"""Piecewise sparse recovery in unions of bases."""

__version__ = "0.1.0"
