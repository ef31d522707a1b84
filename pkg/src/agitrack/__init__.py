"""Shift-level agitation detection from multi-modal wearable recordings."""

__version__ = "0.1.0"
