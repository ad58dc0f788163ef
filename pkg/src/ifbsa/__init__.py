"""Exact Fock-space simulation of time-bin Bell-state analyzers and teleportation."""

__version__ = "0.1.0"
