"""Linear ISI channel with complex AWGN.

SNR is E_s/N0 referenced to the channel input with unit symbol energy, so the
total complex noise variance is ``N0 = 10**(-snr_db/10)`` (``N0/2`` per
real dimension).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

__all__ = [
    "DEFAULT_TAPS",
    "ChannelSpec",
    "SeededRng",
    "noise_variance",
    "apply_fir",
    "add_awgn",
    "transmit",
]

DEFAULT_TAPS = (0.84, 0.47, 0.28)


def noise_variance(snr_db: float) -> float:
    return float(10.0 ** (-snr_db / 10.0))


@dataclass(frozen=True)
class ChannelSpec:
    """FIR taps plus SNR in dB; ``snr_db=None`` means a noiseless channel."""

    taps: tuple[float, ...] = DEFAULT_TAPS
    snr_db: Optional[float] = None

    def __post_init__(self):
        taps = tuple(float(t) for t in self.taps)
        object.__setattr__(self, "taps", taps)
        if not taps:
            raise ValueError("channel needs at least one tap")
        if not np.all(np.isfinite(taps)):
            raise ValueError("channel taps must be finite")
        if self.snr_db is not None and not np.isfinite(self.snr_db):
            raise ValueError("snr_db must be finite (use None for noiseless)")

    @property
    def noise_variance(self) -> float:
        return 0.0 if self.snr_db is None else noise_variance(self.snr_db)

    @property
    def tap_energy(self) -> float:
        return float(np.sum(np.square(self.taps)))


class SeededRng:
    """Reproducible random stream: numpy ``PCG64`` seeded via ``SeedSequence``.

    ``key`` is a tuple of non-negative ints identifying a sub-stream, so
    ``SeededRng(seed, (role, snr_index))`` gives independent, stable streams
    per task without sharing state.
    """

    algorithm = "PCG64/SeedSequence"

    def __init__(self, seed: int, key: Sequence[int] = ()):
        self.seed = int(seed)
        self.key = tuple(int(k) for k in key)
        ss = np.random.SeedSequence(self.seed, spawn_key=self.key)
        self._gen = np.random.Generator(np.random.PCG64(ss))

    def child(self, *key: int) -> "SeededRng":
        return SeededRng(self.seed, self.key + tuple(key))

    @property
    def generator(self) -> np.random.Generator:
        return self._gen

    def normal(self, size) -> np.ndarray:
        return self._gen.standard_normal(size)

    def uniform(self, low=0.0, high=1.0, size=None):
        return self._gen.uniform(low, high, size)

    def bits(self, n: int) -> np.ndarray:
        return self._gen.integers(0, 2, size=n, dtype=np.uint8)

    def permutation(self, n: int) -> np.ndarray:
        return self._gen.permutation(n)

    def __repr__(self):
        return f"SeededRng(seed={self.seed}, key={self.key})"


def apply_fir(x, taps: Sequence[float]) -> np.ndarray:
    """``y[i] = sum_j x[i-j] h[j]`` with zero prehistory, truncated to len(x)."""
    h = np.asarray(taps, dtype=np.float64).reshape(-1)
    if h.size == 0:
        raise ValueError("taps must be non-empty")
    x = np.asarray(x, dtype=np.complex128).reshape(-1)
    if x.size == 0:
        return x.copy()
    return np.convolve(x, h)[: x.size]


def add_awgn(x, snr_db: float, rng: SeededRng) -> np.ndarray:
    """Add circularly-symmetric complex Gaussian noise of total variance N0.

    Draw order is fixed: one ``(2, len)`` standard-normal block, row 0 real,
    row 1 imaginary.
    """
    if not np.isfinite(snr_db):
        raise ValueError("snr_db must be finite")
    x = np.asarray(x, dtype=np.complex128).reshape(-1)
    z = rng.normal((2, x.size))
    sigma = np.sqrt(noise_variance(snr_db) / 2.0)
    return x + sigma * (z[0] + 1j * z[1])


def transmit(x, spec: ChannelSpec, rng: Optional[SeededRng] = None) -> np.ndarray:
    y = apply_fir(x, spec.taps)
    if spec.snr_db is None:
        return y
    if rng is None:
        raise ValueError("a noisy channel needs an rng")
    return add_awgn(y, spec.snr_db, rng)
