"""Probabilistic hysteresis in the cyclically swept Bose-Hubbard dimer"""

__version__ = "0.1.0"
