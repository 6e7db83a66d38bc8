"""Spectral community recovery in a two-block SBM perturbed by a latent
Gaussian-kernel random geometric graph."""
from ._backend import BACKEND
from .model import ModelParams, ParameterError, community_vector, make_params, sample_latents

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "ModelParams", "ParameterError", "community_vector", "make_params",
    "sample_latents", "__version__",
]
