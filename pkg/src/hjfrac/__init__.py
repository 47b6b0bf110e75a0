"""Numerical laboratory for Hamilton-Jacobi equations with fractional diffusion."""

__version__ = "0.1.0"
