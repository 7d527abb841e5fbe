"""Dipole-dipole mediated quantum logic for atoms in optical lattices."""

__version__ = "0.1.0"
