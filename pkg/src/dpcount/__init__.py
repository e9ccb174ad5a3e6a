"""Counting rational points on conic bundle surfaces by fibration."""

__version__ = "0.1.0"
