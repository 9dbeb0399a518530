"""Allee-effect nonlinear synaptic plasticity: single-neuron dynamics,
bifurcation analysis and an associative-memory benchmark."""

__version__ = "0.1.0"
