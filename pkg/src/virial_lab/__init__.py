"""Verification laboratory for the quantum-mechanical virial theorem."""

__version__ = "0.1.0"
