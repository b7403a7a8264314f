"""Numerical toolkit for stationary bump solutions of a 1D neural field
equation: sandwich construction of the bump, fixed-point solve, and a
spectral-radius certificate of its Lyapunov instability."""

__version__ = "0.1.0"
