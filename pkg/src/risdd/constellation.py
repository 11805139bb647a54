"""D-PSK alphabet with binary-reflected Gray bit mapping.

Symbols sit at exp(j*pi*(2l+1)/D), l = 0..D-1, so decision boundaries
fall on the axes-between-symbols and symbol l owns the angular wedge of
half-angle pi/D around its own angle.
"""
from __future__ import annotations

import numpy as np

from .errors import ShapeError

__all__ = ["PskAlphabet"]

_VALID_ORDERS = (2, 4, 8, 16, 32)


def _gray(l: int) -> int:
    return l ^ (l >> 1)


class PskAlphabet:
    """PSK constellation of order D (power of two, 2..32)."""

    def __init__(self, D: int):
        if D not in _VALID_ORDERS:
            raise ValueError(f"PSK order must be one of {_VALID_ORDERS}, got {D}")
        self.D = D
        self.bits_per_symbol = int(np.log2(D))
        ell = np.arange(D)
        self.symbols = np.exp(1j * np.pi * (2 * ell + 1) / D)
        self.gray = np.array([_gray(l) for l in range(D)])
        self._popcount = np.array([bin(v).count("1") for v in range(D)])

    def detect(self, y: np.ndarray | complex) -> np.ndarray | int:
        """Nearest-symbol index for each entry of y.

        Equivalent to angle sectoring: symbol l's wedge is
        (2*pi*l/D, 2*pi*(l+1)/D).  Boundary ties (including y = 0)
        resolve to the smaller index, which the floor of the sector
        arithmetic below provides.
        """
        y = np.asarray(y)
        # shift angles so that symbol 0's wedge starts at 0
        ang = np.angle(y) % (2 * np.pi)
        frac = ang * self.D / (2 * np.pi)
        idx = np.floor(frac).astype(int)
        # exact boundary hit: tie between idx-1 and idx, keep the smaller
        exact = (frac == idx) & (idx > 0)
        idx = np.where(exact, idx - 1, idx) % self.D
        if idx.ndim == 0:
            return int(idx)
        return idx

    def bit_diff(self, l1: int, l2: int) -> int:
        """Hamming distance between the Gray codewords of two indices."""
        if not (0 <= l1 < self.D and 0 <= l2 < self.D):
            raise ValueError(f"indices must be < {self.D}")
        return int(bin(_gray(l1) ^ _gray(l2)).count("1"))

    def bit_diff_table(self) -> np.ndarray:
        """e_bit(0, l) for l = 0..D-1."""
        return np.array([self.bit_diff(0, l) for l in range(self.D)])

    def ber_count(self, tx: np.ndarray, rx: np.ndarray) -> tuple[int, int]:
        """(bit_errors, total_bits) between two index sequences."""
        tx = np.asarray(tx)
        rx = np.asarray(rx)
        if tx.shape != rx.shape:
            raise ShapeError(f"length mismatch {tx.shape} vs {rx.shape}")
        xor = self.gray[tx] ^ self.gray[rx]
        errors = int(self._popcount[xor].sum()) if xor.size else 0
        return errors, tx.size * self.bits_per_symbol

    def modulate(self, idx: np.ndarray) -> np.ndarray:
        return self.symbols[np.asarray(idx)]
