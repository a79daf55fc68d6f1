"""Lagrangian mechanics on skew-symmetric algebroids."""

__version__ = "1.0.0"
