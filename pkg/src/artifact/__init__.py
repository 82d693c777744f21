"""Numerical engine for scattering amplitudes on the phase-space bundle."""

__version__ = "0.1.0"
