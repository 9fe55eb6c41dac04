"""Depth-aware refocusing: bokeh rendering, calibration, and data generation."""

__version__ = "0.1.0"
