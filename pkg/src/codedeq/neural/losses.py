from __future__ import annotations

import numpy as np

from .layers import ShapeError

__all__ = ["mse_loss"]


def mse_loss(pred, target) -> tuple[float, np.ndarray]:
    """Mean squared error over all elements and its gradient w.r.t. ``pred``."""
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ShapeError(f"pred {pred.shape} and target {target.shape} differ")
    if pred.size == 0:
        raise ShapeError("mse_loss of an empty tensor")
    diff = pred - target
    return float(np.mean(diff * diff)), 2.0 * diff / diff.size
