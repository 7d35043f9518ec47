"""Hybrid qubit/qumode simulation of thermal states with exact oracles."""

__version__ = "0.1.0"
