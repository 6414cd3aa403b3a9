"""Lazy random walks on slab-lattice graphs whose return-probability ratio oscillates."""

__version__ = "0.1.0"
