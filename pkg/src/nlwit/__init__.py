"""Linear and nonlinear entanglement witnesses for small finite-dimensional systems."""

__version__ = "0.1.0"
