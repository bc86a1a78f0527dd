"""Numerical laboratory for random tournament and anti-symmetric matrices."""
__version__ = "0.1.0"
