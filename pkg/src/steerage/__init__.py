"""Steering ellipsoids and geometric local-hidden-state models for two qubits."""

__version__ = "0.1.0"
