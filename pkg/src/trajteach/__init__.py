"""Trajectory reward learning from demonstrations, corrections, and preferences."""

__version__ = "0.1.0"
