"""Lattice, Fock-space and spectral tools for anti-Wick quantized Yang-Mills energy."""

__version__ = "0.1.0"
