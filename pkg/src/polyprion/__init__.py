"""Polygonal discontinuous Galerkin solvers for prion-like spreading models."""

__version__ = "0.1.0"
