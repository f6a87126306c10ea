"""Generation and verification of exact solutions for linearizable nonlinear PDEs."""

__version__ = "0.1.0"
