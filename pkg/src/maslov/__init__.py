"""Maslov index of Lagrangian-plane paths with spectral-flow cross checks."""

__version__ = "0.1.0"
