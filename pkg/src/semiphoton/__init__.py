"""Semiclassical tools for Hermite-Gaussian photon modes."""

__version__ = "0.1.0"
