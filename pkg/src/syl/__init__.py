"""Numerical laboratory for radial sigma_k-Yamabe metrics on the cylinder."""
__version__ = "0.1.0"
