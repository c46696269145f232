"""Desk-scale policy adaptation lab for a planar walker."""

__version__ = "0.1.0"
