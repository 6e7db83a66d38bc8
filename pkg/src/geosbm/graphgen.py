"""Kernel matrix, block matrix, conditional mean and adjacency sampling."""
from __future__ import annotations

import csv
import struct
from dataclasses import dataclass

import numpy as np

from . import _backend
from .model import EDGES, ModelParams, ones_vector, community_vector, rng_for

CLAMP_TOLERANCE = 1e-12


def kernel_matrix(latents: np.ndarray, gamma: float) -> np.ndarray:
    """Gaussian kernel ``P[i, j] = exp(-gamma * |Xi - Xj|^2)`` with zero diagonal."""
    if not gamma > 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    X = np.ascontiguousarray(latents, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != 2:
        raise ValueError(f"latents must have shape (N, 2), got {X.shape}")
    return _backend.gaussian_kernel(X, float(gamma))


@dataclass(frozen=True)
class BlockMatrix:
    """Rank-two block matrix with ``p1`` on the diagonal blocks, ``p2`` off them.

    ``dense()`` keeps the diagonal (``p1``) so that
    ``dense() = lambda1 v1 v1^T + lambda2 sigma sigma^T`` holds exactly.
    """

    N: int
    p1: float
    p2: float

    @property
    def lambda1(self) -> float:
        return self.N * (self.p1 + self.p2) / 2

    @property
    def lambda2(self) -> float:
        return self.N * (self.p1 - self.p2) / 2

    @property
    def v1(self) -> np.ndarray:
        return ones_vector(self.N)

    @property
    def sigma(self) -> np.ndarray:
        return community_vector(self.N)

    def dense(self) -> np.ndarray:
        h = self.N // 2
        M = np.full((self.N, self.N), self.p2)
        M[:h, :h] = self.p1
        M[h:, h:] = self.p1
        return M

    def matvec(self, x: np.ndarray) -> np.ndarray:
        h = self.N // 2
        x = np.asarray(x, dtype=float)
        s1, s2 = x[:h].sum(), x[h:].sum()
        out = np.empty_like(x)
        out[:h] = self.p1 * s1 + self.p2 * s2
        out[h:] = self.p2 * s1 + self.p1 * s2
        return out


def block_matrix(params: ModelParams) -> BlockMatrix:
    return BlockMatrix(params.N, params.p1, params.p2)


def conditional_mean(params: ModelParams, kernel: np.ndarray) -> np.ndarray:
    """Edge probabilities ``Q = kappa P + P0`` with zero diagonal.

    Entries are clamped to ``[0, 1]``; a clamp that moves any entry by more
    than ``CLAMP_TOLERANCE`` raises, since valid parameters cannot produce it.
    """
    if kernel.shape != (params.N, params.N):
        raise ValueError(f"kernel shape {kernel.shape} does not match N={params.N}")
    Q = params.kappa * kernel + block_matrix(params).dense()
    np.fill_diagonal(Q, 0.0)
    clamped = np.clip(Q, 0.0, 1.0)
    drift = np.max(np.abs(clamped - Q))
    if drift > CLAMP_TOLERANCE:
        raise ValueError(f"edge probabilities left [0, 1] by {drift:.3g}; parameter validation bypassed?")
    return clamped


class AdjacencyMatrix:
    """Symmetric 0/1 adjacency with zero diagonal, stored bit-packed.

    The packed form holds the row-major strict upper triangle. ``dense()``
    returns a float64 copy ready for eigensolvers.
    """

    __slots__ = ("N", "_bits")

    def __init__(self, dense_01: np.ndarray):
        A = np.asarray(dense_01)
        n = A.shape[0]
        if A.shape != (n, n):
            raise ValueError("adjacency must be square")
        if not np.array_equal(A, A.T):
            raise ValueError("adjacency must be symmetric")
        if np.any(np.diagonal(A) != 0):
            raise ValueError("adjacency must have a zero diagonal")
        if A.size and not np.all((A == 0) | (A == 1)):
            raise ValueError("adjacency entries must be 0 or 1")
        iu = np.triu_indices(n, 1)
        self.N = n
        self._bits = np.packbits(A[iu].astype(bool))

    @classmethod
    def from_upper(cls, N: int, upper: np.ndarray) -> "AdjacencyMatrix":
        obj = cls.__new__(cls)
        obj.N = int(N)
        obj._bits = np.packbits(np.asarray(upper).astype(bool))
        return obj

    def upper(self) -> np.ndarray:
        m = self.N * (self.N - 1) // 2
        return np.unpackbits(self._bits, count=m).astype(np.uint8)

    def dense(self, dtype=np.float64) -> np.ndarray:
        A = np.zeros((self.N, self.N), dtype=dtype)
        iu, ju = np.triu_indices(self.N, 1)
        u = self.upper()
        A[iu, ju] = u
        A[ju, iu] = u
        return A

    def n_edges(self) -> int:
        return int(self.upper().sum())

    def degrees(self) -> np.ndarray:
        return self.dense(np.int64).sum(axis=1)

    def density(self) -> float:
        m = self.N * (self.N - 1) // 2
        return self.n_edges() / m if m else 0.0

    def __eq__(self, other):
        return isinstance(other, AdjacencyMatrix) and self.N == other.N and np.array_equal(self._bits, other._bits)

    def __repr__(self):
        return f"AdjacencyMatrix(N={self.N}, edges={self.n_edges()})"


def sample_adjacency(Q: np.ndarray, seed: int, stream: int = 0) -> AdjacencyMatrix:
    """Independent Bernoulli(``Q[i, j]``) edges over pairs ``i < j``.

    One uniform per pair, drawn in row-major upper-triangle order from the
    edge stream of ``(seed, stream)``.
    """
    Q = np.ascontiguousarray(Q, dtype=np.float64)
    n = Q.shape[0]
    if Q.size and (Q.min() < 0.0 or Q.max() > 1.0):
        raise ValueError("edge probabilities must lie in [0, 1]")
    rng = rng_for(seed, stream, purpose=EDGES)
    u = rng.random(n * (n - 1) // 2)
    return AdjacencyMatrix(_backend.bernoulli_fill(Q, u))


def marginal_edge_probability(params: ModelParams) -> float:
    """Edge probability after integrating out the latent positions."""
    return (params.p1 + params.p2) / 2 + params.kappa / (1 + 4 * params.gamma)


# -- matrix dumps ------------------------------------------------------------

_MAGIC = b"GSBMUT01"
_DTYPES = {"f8": np.float64, "u1": np.uint8}


def dump_upper(path, matrix: np.ndarray) -> None:
    """Write the strict upper triangle of a symmetric matrix.

    Layout: 8-byte magic ``GSBMUT01``, little-endian uint64 ``N``, 2-byte
    ASCII dtype code (``f8`` or ``u1``), then the ``N(N-1)/2`` row-major
    upper-triangle entries in that dtype, little-endian.
    """
    M = np.asarray(matrix)
    n = M.shape[0]
    code = "u1" if M.dtype == np.uint8 else "f8"
    vals = M[np.triu_indices(n, 1)].astype("<" + code if code == "f8" else code)
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<Q", n))
        fh.write(code.encode("ascii"))
        fh.write(vals.tobytes())


def load_upper(path) -> np.ndarray:
    """Inverse of :func:`dump_upper`; returns the full symmetric matrix."""
    with open(path, "rb") as fh:
        if fh.read(8) != _MAGIC:
            raise ValueError(f"{path}: not an upper-triangle dump")
        (n,) = struct.unpack("<Q", fh.read(8))
        code = fh.read(2).decode("ascii")
        dtype = np.dtype("<f8") if code == "f8" else np.dtype(_DTYPES[code])
        vals = np.frombuffer(fh.read(), dtype=dtype)
    if vals.size != n * (n - 1) // 2:
        raise ValueError(f"{path}: truncated payload")
    M = np.zeros((n, n), dtype=dtype.newbyteorder("="))
    iu, ju = np.triu_indices(n, 1)
    M[iu, ju] = vals
    M[ju, iu] = vals
    return M


def dump_csv(path, matrix: np.ndarray, max_n: int = 500) -> None:
    """Full matrix as CSV, refused above ``max_n`` rows."""
    M = np.asarray(matrix)
    if M.shape[0] > max_n:
        raise ValueError(f"CSV export limited to N <= {max_n}")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        for row in M:
            w.writerow([repr(float(x)) if M.dtype.kind == "f" else int(x) for x in row])
