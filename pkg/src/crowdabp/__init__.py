"""Fourier-Galerkin engine for crowded active Brownian particle models."""

from .errors import ConfigurationError, NumericFailure
from .spectral import SpatialGrid, SpectralField

__version__ = "0.1.0"

__all__ = ["ConfigurationError", "NumericFailure", "SpatialGrid", "SpectralField", "__version__"]
