"""Simulation-ready 3D asset toolkit."""

__version__ = "0.1.0"
