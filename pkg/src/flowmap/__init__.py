"""Lagrangian flow-map toolkit: extraction, neural reconstruction, baselines."""

__version__ = "0.1.0"
