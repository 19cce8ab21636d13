"""Conformal quadratic element and conformal rigidity of hypersurfaces."""

__version__ = "0.1.0"
