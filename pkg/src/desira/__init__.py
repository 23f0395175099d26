"""Desirability-based multi-objective optimization."""

__version__ = "0.1.0"
