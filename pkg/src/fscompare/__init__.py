"""Benchmark filter feature-selection methods by LOOCV stability and accuracy."""

__version__ = "0.1.0"
