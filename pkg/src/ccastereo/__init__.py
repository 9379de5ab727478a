"""Continuous cost aggregation for dual-pixel and stereo disparity."""

__version__ = "0.1.0"
