"""Input validation for complex baseband sequences and bit arrays."""
from __future__ import annotations

import numpy as np


def check_iq(x, name: str = "X", *, allow_empty: bool = False) -> np.ndarray:
    """Return ``x`` as a finite 1-D complex128 array.

    A real ``(n, 2)`` array is accepted and read as (in-phase, quadrature)
    columns, which is what generic array tooling tends to hand over.
    """
    arr = np.asarray(x)
    if arr.ndim == 2 and arr.shape[1] == 2 and not np.iscomplexobj(arr):
        arr = arr[:, 0] + 1j * arr[:, 1]
    if arr.ndim != 1:
        raise ValueError(f"{name} must be a 1-D complex sequence, got shape {arr.shape}")
    if arr.size == 0 and not allow_empty:
        raise ValueError(f"{name} is empty")
    arr = arr.astype(np.complex128, copy=False)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains NaN or inf")
    return arr


def check_bits(b, name: str = "bits") -> np.ndarray:
    arr = np.asarray(b)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be 1-D, got shape {arr.shape}")
    if arr.size and not np.isin(arr, (0, 1)).all():
        raise ValueError(f"{name} must contain only 0 and 1")
    return arr.astype(np.uint8, copy=False)


def check_same_length(a, b, names=("a", "b")):
    if len(a) != len(b):
        raise ValueError(
            f"{names[0]} and {names[1]} differ in length ({len(a)} != {len(b)})"
        )
