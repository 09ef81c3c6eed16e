"""Sieve-backed numerics for correlations of bounded multiplicative functions."""

__version__ = "0.1.0"
