"""Numerical laboratory for Gaussian fluctuations of the smoothed stochastic
heat equation / continuous directed polymer in dimension three and above."""

__version__ = "0.1.0"
