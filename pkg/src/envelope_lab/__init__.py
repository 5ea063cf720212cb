"""Pseudospectral tools for Klein-Gordon wave packets and their NLS envelopes."""

from .spectral import Field, NormSpec, TorusGrid

__version__ = "0.1.0"

__all__ = ["Field", "NormSpec", "TorusGrid", "__version__"]
