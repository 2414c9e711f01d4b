"""Kink statistics of ramped quantum Ising chains from free-fermion dynamics."""

__version__ = "0.1.0"
