"""Adiabatic-passage-based QAOA parameter setting for random k-SAT."""

__version__ = "0.1.0"
