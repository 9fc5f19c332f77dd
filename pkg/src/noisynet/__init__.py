"""Subgraph densities, error rates and clustering from noisy network replicates."""

__version__ = "0.1.0"
