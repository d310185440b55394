"""Causal analysis of configurable-system performance data."""
__version__ = "0.1.0"
