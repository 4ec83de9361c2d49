"""Characteristic functions of pure hypercontractions, computed and verified."""

__version__ = "0.1.0"
