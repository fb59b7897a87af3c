"""Bayesian optimization with a learned selector over UCB acquisition functions."""

__version__ = "0.1.0"
