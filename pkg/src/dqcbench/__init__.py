"""Benchmarking single-QPU against distributed two-QPU devices on random
quantum-volume circuits: exact noise-allocation matrices, analytic fidelity
predictors, and a trajectory statevector simulator."""

__version__ = "0.1.0"
