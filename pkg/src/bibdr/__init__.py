"""Spatio-temporal distribution regression with boundary-inflated binomial mixtures."""

__version__ = "0.1.0"
