"""Model parameters, latent positions and the ground-truth community vector."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class ParameterError(ValueError):
    """Raised when model parameters violate a structural constraint."""


@dataclass(frozen=True)
class ModelParams:
    """The five scalars of the geometrically perturbed two-block SBM.

    Attributes
    ----------
    N : int
        Number of vertices (even, the two communities are balanced).
    p1, p2 : float
        Intra- and inter-community connection probabilities, ``p1 > p2``.
    kappa : float
        Strength of the latent Gaussian-kernel graph, in ``[0, 1]``.
    gamma : float
        Inverse width of the kernel ``exp(-gamma * |Xi - Xj|^2)``.
    """

    N: int
    p1: float
    p2: float
    kappa: float
    gamma: float

    def replace(self, **changes) -> "ModelParams":
        fields = dict(N=self.N, p1=self.p1, p2=self.p2, kappa=self.kappa, gamma=self.gamma)
        fields.update(changes)
        return make_params(**fields)

    def as_dict(self) -> dict:
        return dict(N=self.N, p1=self.p1, p2=self.p2, kappa=self.kappa, gamma=self.gamma)


def make_params(N, p1, p2, kappa, gamma) -> ModelParams:
    """Validate and build a :class:`ModelParams`.

    Raises :class:`ParameterError` naming the first violated constraint.
    """
    for name, value in (("N", N), ("p1", p1), ("p2", p2), ("kappa", kappa), ("gamma", gamma)):
        if not math.isfinite(float(value)):
            raise ParameterError(f"{name} must be finite, got {value!r}")
    if int(N) != N or N <= 0:
        raise ParameterError(f"N must be a positive integer, got {N!r}")
    N = int(N)
    if N % 2:
        raise ParameterError(f"N must be even (balanced communities), got {N}")
    if not 0.0 < p1 < 1.0:
        raise ParameterError(f"p1 must lie in (0, 1), got {p1}")
    if not 0.0 < p2 < 1.0:
        raise ParameterError(f"p2 must lie in (0, 1), got {p2}")
    if not p1 > p2:
        raise ParameterError(f"p1 > p2 required, got p1={p1}, p2={p2}")
    if not 0.0 <= kappa <= 1.0:
        raise ParameterError(f"kappa must lie in [0, 1], got {kappa}")
    if not gamma > 0.0:
        raise ParameterError(f"gamma must be positive, got {gamma}")
    if kappa + max(p1, p2) > 1.0:
        raise ParameterError(
            f"kappa + max(p1, p2) <= 1 violated: {kappa} + {max(p1, p2)} > 1"
        )
    return ModelParams(N, float(p1), float(p2), float(kappa), float(gamma))


def rng_for(seed: int, stream: int = 0, *, purpose: int = 0) -> np.random.Generator:
    """Counter-based generator for ``(seed, stream)``.

    Philox keyed through a ``SeedSequence`` of ``(seed, stream, purpose)``, so
    trial ``stream`` of a sweep does not depend on which trials ran before it.
    ``purpose`` separates the latent draw from the edge draw of one trial.
    """
    if seed < 0 or stream < 0:
        raise ValueError("seed and stream must be non-negative")
    ss = np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, int(stream), int(purpose)])
    return np.random.Generator(np.random.Philox(ss))


LATENT = 0
EDGES = 1


def sample_latents(params: ModelParams, seed: int, stream: int = 0) -> np.ndarray:
    """Draw ``N`` i.i.d. standard 2-D Gaussian latent positions, shape ``(N, 2)``.

    Uses numpy's ziggurat normal sampler on top of :func:`rng_for`, which is a
    fixed deterministic transform of the Philox output stream.
    """
    rng = rng_for(seed, stream, purpose=LATENT)
    return rng.standard_normal((params.N, 2))


def community_vector(N: int) -> np.ndarray:
    """``+1/sqrt(N)`` on the first half of the vertices, ``-1/sqrt(N)`` on the second."""
    if int(N) != N or N <= 0 or N % 2:
        raise ParameterError(f"N must be a positive even integer, got {N!r}")
    N = int(N)
    sigma = np.full(N, 1.0 / math.sqrt(N))
    sigma[N // 2:] = -sigma[N // 2:]
    return sigma


def ones_vector(N: int) -> np.ndarray:
    """Unit all-ones direction, the top eigenvector of the block matrix."""
    return np.full(int(N), 1.0 / math.sqrt(N))
