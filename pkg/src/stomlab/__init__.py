"""Computable additive functionals, occupation measures and collision measures
of random walks on finite electrical networks."""

__version__ = "0.1.0"
