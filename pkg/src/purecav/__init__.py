"""Simulation and closed-form checks for spin-chain entanglement pumping with cavity fusion."""

__version__ = "0.1.0"
