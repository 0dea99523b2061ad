"""Orthonormal-frame evolution of the vacuum Einstein equations with geodesic boundaries."""

from .state import Grid, StateField, read_snapshot, write_snapshot

__all__ = ["Grid", "StateField", "read_snapshot", "write_snapshot"]
__version__ = "0.1.0"
