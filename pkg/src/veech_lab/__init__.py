"""Flat, hyperbolic and combinatorial geometry of origami surface bundles on desk-scale windows."""

__version__ = "0.1.0"
