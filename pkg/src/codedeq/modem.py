"""Gray-mapped QPSK on the unit-energy constellation.

Bit pair ``(b0, b1)`` maps to ``((1 - 2*b0) + 1j*(1 - 2*b1)) / sqrt(2)``::

    01 <-> 00          Q
     |      |          ^
    11 <-> 10          +--> I    (00 is the first quadrant)

so the first bit picks the in-phase sign and the second the quadrature sign.
A zero coordinate demodulates to bit 0 (positive half-plane).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["ConstellationMap", "QPSK_GRAY", "qpsk_modulate", "qpsk_hard_demodulate"]

_A = 1.0 / np.sqrt(2.0)


@dataclass(frozen=True)
class ConstellationMap:
    """Axis-separable 4-point map: bit 0 sets I, bit 1 sets Q.

    ``i_levels[b]`` / ``q_levels[b]`` give the coordinate for bit value ``b``.
    """

    i_levels: tuple[float, float] = (_A, -_A)
    q_levels: tuple[float, float] = (_A, -_A)

    def __post_init__(self):
        for lv in (self.i_levels, self.q_levels):
            if len(lv) != 2 or lv[0] == lv[1]:
                raise ValueError("each axis needs two distinct levels")

    @property
    def bits_per_symbol(self) -> int:
        return 2

    @property
    def points(self) -> np.ndarray:
        """Constellation points indexed by ``2*b0 + b1``."""
        return np.array(
            [self.i_levels[b0] + 1j * self.q_levels[b1] for b0 in (0, 1) for b1 in (0, 1)]
        )

    @property
    def bit_levels(self) -> np.ndarray:
        """``[axis, bit]`` coordinate table (axis 0 = I, 1 = Q)."""
        return np.array([self.i_levels, self.q_levels], dtype=np.float64)


QPSK_GRAY = ConstellationMap()


def qpsk_modulate(bits, cmap: ConstellationMap = QPSK_GRAY) -> np.ndarray:
    b = np.asarray(bits)
    if b.ndim != 1:
        raise ValueError("bits must be one-dimensional")
    if b.size % 2:
        raise ValueError(f"QPSK needs an even number of bits, got {b.size}")
    if b.size and not np.isin(b, (0, 1)).all():
        raise ValueError("bits must contain only 0 and 1")
    pairs = b.reshape(-1, 2).astype(np.int64)
    lv = cmap.bit_levels
    return lv[0][pairs[:, 0]] + 1j * lv[1][pairs[:, 1]]


def _axis_decide(x: np.ndarray, levels) -> np.ndarray:
    lo, hi = levels
    mid = 0.5 * (lo + hi)
    # bit 0 wins the boundary tie
    if lo > hi:
        return (x < mid).astype(np.uint8)
    return (x > mid).astype(np.uint8)


def qpsk_hard_demodulate(symbols, cmap: ConstellationMap = QPSK_GRAY) -> np.ndarray:
    s = np.asarray(symbols, dtype=np.complex128).reshape(-1)
    out = np.empty((s.size, 2), np.uint8)
    out[:, 0] = _axis_decide(s.real, cmap.i_levels)
    out[:, 1] = _axis_decide(s.imag, cmap.q_levels)
    return out.reshape(-1)
