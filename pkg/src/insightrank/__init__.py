"""Insight extraction from multi-dimensional tables and text-assisted ranking."""

__version__ = "0.1.0"
