"""Numerical certification of direct-image constructions for Riemannian submersions."""

__version__ = "0.1.0"
