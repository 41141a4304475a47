"""Concentration-state classification from EEG band-power streams."""

__version__ = "0.1.0"
