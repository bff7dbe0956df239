"""Simulation of a pumped transmon-buffer-waste frequency converter and the
single-photon-detector efficiency extraction pipeline built on top of it."""

__version__ = "0.1.0"
