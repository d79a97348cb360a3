"""Minimum pure decision trees via SAT-based MaxSAT optimization."""

__version__ = "0.1.0"
