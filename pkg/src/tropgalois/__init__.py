"""Exact divisor theory, group quotients and Galois coverings on metric graphs."""

__version__ = "0.1.0"
