"""Exact and numerical tools for restricted weak-type exponent regions of
averaging operators along curves and curve families."""

__version__ = "0.1.0"
