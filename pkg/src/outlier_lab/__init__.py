"""Eigenvalue statistics of rank-one non-Hermitian GUE deformations."""

__version__ = "0.1.0"
