"""Simulation and placement engine for mobile multiplayer game architectures."""
__version__ = "0.1.0"
