"""Exact Diophantine approximation over the Laurent series field F_q((1/x))."""

__version__ = "0.1.0"
