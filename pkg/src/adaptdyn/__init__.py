"""Continuous-time adaptive dynamics learning and sampling-based control."""

__version__ = "0.1.0"
