"""Spectral graph filtering with Chebyshev interpolation.

Polynomial filter bases, graph operators, a small reverse-mode
differentiation engine and the node-classification models built on top.
"""

__version__ = "0.1.0"
