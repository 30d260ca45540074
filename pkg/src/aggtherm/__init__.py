"""Aggregate single-zone thermal models of multi-zone buildings and their identification."""

__version__ = "0.1.0"
