"""Trilateral phase-shift precision landing: geometry, link, detection, guidance, simulation."""

__version__ = "0.1.0"
