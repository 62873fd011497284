"""Stochastic multipath (tournament) routing for entanglement distribution on repeater networks."""

__version__ = "0.1.0"
