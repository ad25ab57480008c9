"""Closed-loop thrust regulation toolkit for a variable-inlet solid fuel ramjet."""

__version__ = "0.1.0"
