"""Pilot-aided LMS linear equalizer.

The filter output for received sample ``i`` is ``sum_j w[j] * y[i-j]`` and is
trained towards ``d[i] = x[i - delay]``; ``lms_apply`` undoes that delay so the
result lines up with the transmitted symbol index.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import check_iq

__all__ = [
    "LmsConfig",
    "LmsFilter",
    "LmsDivergenceError",
    "lms_train",
    "lms_apply",
    "LMSEqualizer",
]

DIVERGENCE_POWER = 1e6


class LmsDivergenceError(RuntimeError):
    """Raised when the LMS error power blows up."""


@dataclass(frozen=True)
class LmsConfig:
    # 11 taps covers the inverse of a short minimum-phase channel; mu=0.01 is
    # well inside the stability region for unit-power input
    num_taps: int = 11
    step_size: float = 0.01
    reference_delay: int = 5
    training_len: int = 2000

    def __post_init__(self):
        if self.num_taps < 1:
            raise ValueError("num_taps must be >= 1")
        if not 0.0 < self.step_size:
            raise ValueError("step_size must be positive")
        if self.reference_delay < 0:
            raise ValueError("reference_delay must be >= 0")
        if self.training_len < 1:
            raise ValueError("training_len must be >= 1")


@dataclass
class LmsFilter:
    weights: np.ndarray
    reference_delay: int
    error_power: np.ndarray = field(default_factory=lambda: np.empty(0))

    @property
    def num_taps(self) -> int:
        return self.weights.size


def unit_impulse(cfg: LmsConfig) -> np.ndarray:
    w = np.zeros(cfg.num_taps, np.complex128)
    w[min(cfg.reference_delay, cfg.num_taps - 1)] = 1.0
    return w


def lms_train(
    received,
    pilots,
    cfg: LmsConfig = LmsConfig(),
    init: Optional[np.ndarray] = None,
) -> LmsFilter:
    """Run one LMS pass over all ``pilots``.

    ``pilots[k]`` is the known symbol transmitted at index ``k``; it is the
    desired output at received index ``k + reference_delay``.
    """
    y = check_iq(received, "received")
    d = check_iq(pilots, "pilots")
    N, D, mu = cfg.num_taps, cfg.reference_delay, cfg.step_size
    need = d.size + max(N, D)
    if y.size < need:
        raise ValueError(f"need at least {need} received samples, got {y.size}")
    w = np.zeros(N, np.complex128) if init is None else np.array(init, np.complex128)
    if w.shape != (N,):
        raise ValueError(f"init must have shape ({N},)")

    # ypad[i + N - 1 - j] == y[i - j], zero for negative indices
    ypad = np.concatenate([np.zeros(N - 1, np.complex128), y])
    err = np.empty(d.size)
    for k in range(d.size):
        i = k + D
        window = ypad[i : i + N][::-1]
        e = d[k] - window @ w
        p = e.real * e.real + e.imag * e.imag
        if not p < DIVERGENCE_POWER:
            raise LmsDivergenceError(
                f"LMS diverged at step {k} (error power {p:.3g}, mu={mu})"
            )
        err[k] = p
        w = w + mu * e * np.conj(window)
    return LmsFilter(w, D, err)


def lms_apply(filt: LmsFilter, received) -> np.ndarray:
    y = check_iq(received, "received", allow_empty=True)
    D = filt.reference_delay
    full = np.convolve(y, filt.weights) if y.size else np.zeros(0, np.complex128)
    need = y.size + D
    if full.size < need:
        full = np.concatenate([full, np.zeros(need - full.size, np.complex128)])
    return full[D:need]


class LMSEqualizer(BaseEstimator):
    """Linear LMS equalizer with an estimator interface.

    ``fit(received, transmitted)`` uses the first ``training_len`` transmitted
    symbols as pilots; ``predict(received)`` returns delay-aligned soft symbols.
    """

    def __init__(self, num_taps=11, step_size=0.01, reference_delay=5, training_len=2000):
        self.num_taps = num_taps
        self.step_size = step_size
        self.reference_delay = reference_delay
        self.training_len = training_len

    def _config(self) -> LmsConfig:
        return LmsConfig(
            num_taps=self.num_taps,
            step_size=self.step_size,
            reference_delay=self.reference_delay,
            training_len=self.training_len,
        )

    def fit(self, X, y):
        cfg = self._config()
        received = check_iq(X, "received")
        transmitted = check_iq(y, "transmitted")
        n_pilots = min(
            cfg.training_len,
            received.size - max(cfg.num_taps, cfg.reference_delay),
            transmitted.size,
        )
        if n_pilots < 1:
            raise ValueError("not enough symbols to train on")
        self.filter_ = lms_train(received, transmitted[:n_pilots], cfg)
        self.weights_ = self.filter_.weights
        self.error_power_ = self.filter_.error_power
        return self

    def predict(self, X) -> np.ndarray:
        check_is_fitted(self, "filter_")
        return lms_apply(self.filter_, X)
