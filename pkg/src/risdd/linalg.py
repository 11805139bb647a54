"""Complex-matrix kernel and reproducible random sampling.

Everything here is a thin, contract-checked layer over numpy: a DFT
matrix with a fixed sign convention, circularly-symmetric Gaussian
sampling from counter-based per-trial streams, and a least-squares
solver that refuses rank-deficient systems instead of silently
regularizing them.
"""
from __future__ import annotations

import numpy as np

from .errors import RankDeficient, ShapeError

__all__ = ["SeededStream", "dft_matrix", "complex_gaussian", "lstsq"]


class SeededStream:
    """Reproducible random stream for one Monte Carlo trial.

    Identical (seed, stream_id) gives bit-identical samples regardless
    of how trials are scheduled, because each stream is derived from an
    independent SeedSequence spawn key rather than from a shared
    sequential generator.
    """

    def __init__(self, seed: int, stream_id: int = 0):
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        ss = np.random.SeedSequence(entropy=self.seed,
                                    spawn_key=(self.stream_id,))
        self.rng = np.random.Generator(np.random.Philox(ss))

    def child(self, tag: int) -> "SeededStream":
        """Derived stream for a sub-task (e.g. noise vs. channel draws)."""
        child = SeededStream.__new__(SeededStream)
        child.seed = self.seed
        child.stream_id = self.stream_id
        ss = np.random.SeedSequence(entropy=self.seed,
                                    spawn_key=(self.stream_id, int(tag)))
        child.rng = np.random.Generator(np.random.Philox(ss))
        return child


def dft_matrix(n: int) -> np.ndarray:
    """DFT matrix V_n with [V_n]_{p,q} = exp(-j*2*pi*p*q/n) (0-indexed).

    The first row and column are all ones, and V_n^H V_n = n*I_n.
    """
    if n < 1:
        raise ShapeError(f"dft_matrix needs n >= 1, got {n}")
    p = np.arange(n)
    return np.exp(-2j * np.pi * np.outer(p, p) / n)


def complex_gaussian(stream: SeededStream, n: int,
                     variance: float = 1.0,
                     shape: tuple[int, ...] | None = None) -> np.ndarray:
    """i.i.d. circularly-symmetric complex Gaussians CN(0, variance).

    Real and imaginary parts each carry variance/2.  `shape` overrides
    `n` for matrix-valued draws.
    """
    if variance < 0:
        raise ValueError(f"variance must be >= 0, got {variance}")
    shp = shape if shape is not None else (n,)
    z = stream.rng.standard_normal(shp) + 1j * stream.rng.standard_normal(shp)
    return np.sqrt(variance / 2.0) * z


def lstsq(A: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve min_x ||Ax - b|| for full-column-rank A.

    Raises RankDeficient when singular values below
    max(rows, cols) * eps * sigma_max indicate the numerical rank is
    less than the column count.
    """
    A = np.asarray(A)
    b = np.asarray(b)
    if A.ndim != 2 or b.shape[0] != A.shape[0]:
        raise ShapeError(f"incompatible shapes {A.shape} and {b.shape}")
    m, n = A.shape
    if m < n:
        raise RankDeficient(m, n)
    u, s, vh = np.linalg.svd(A, full_matrices=False)
    tol = max(m, n) * np.finfo(float).eps * (s[0] if s.size else 0.0)
    rank = int(np.sum(s > tol))
    if rank < n:
        raise RankDeficient(rank, n)
    return (vh.conj().T * (1.0 / s)) @ (u.conj().T @ b)
