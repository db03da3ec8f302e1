"""Central finite-difference gradient checks."""
from __future__ import annotations

from typing import Callable

import numpy as np

from .layers import Layer, Sequential

__all__ = ["numeric_grad", "relative_error", "check_layer", "check_model"]


def numeric_grad(f: Callable[[], float], x: np.ndarray, step: float = 1e-5,
                 indices=None) -> np.ndarray:
    """d f / d x by central differences, perturbing ``x`` in place.

    ``indices`` (flat positions) restricts the work to a subset; other
    entries of the result are left at zero.
    """
    grad = np.zeros_like(x)
    flat = range(x.size) if indices is None else indices
    for k in flat:
        idx = np.unravel_index(int(k), x.shape)
        orig = x[idx]
        x[idx] = orig + step
        fp = f()
        x[idx] = orig - step
        fm = f()
        x[idx] = orig
        grad[idx] = (fp - fm) / (2.0 * step)
    return grad


def relative_error(analytic: np.ndarray, numeric: np.ndarray, floor: float = 1e-6) -> float:
    """Max elementwise ``|a - n| / max(|a| + |n|, floor)``."""
    denom = np.maximum(np.abs(analytic) + np.abs(numeric), floor)
    return float(np.max(np.abs(analytic - numeric) / denom)) if analytic.size else 0.0


def _projection_loss(forward, x, weights):
    return float(np.sum(forward(x) * weights))


def check_layer(layer: Layer | Sequential, x: np.ndarray, rng: np.random.Generator,
                step: float = 1e-5) -> dict[str, float]:
    """Compare analytic and numeric gradients of ``sum(layer(x) * R)``.

    Returns the max relative error per parameter name plus ``"input"``.
    """
    x = np.array(x, dtype=np.float64)
    y = layer.forward(x)
    R = rng.standard_normal(y.shape)
    dx = layer.backward(R)
    if isinstance(layer, Sequential):
        params, grads = layer.named_params(), layer.named_grads()
    else:
        params, grads = layer.params, layer.grads
    grads = {k: v.copy() for k, v in grads.items()}

    def loss():
        return _projection_loss(layer.forward, x, R)

    errors = {"input": relative_error(dx, numeric_grad(loss, x, step))}
    for name, p in params.items():
        errors[name] = relative_error(grads[name], numeric_grad(loss, p, step))
    return errors


def _sample(size: int, max_entries, rng):
    if max_entries is None or size <= max_entries:
        return None
    return np.sort(rng.choice(size, max_entries, replace=False))


def check_model(model: Sequential, x: np.ndarray, target: np.ndarray,
                step: float = 1e-5, max_entries: int | None = None,
                rng: np.random.Generator | None = None) -> dict[str, float]:
    """Gradient check of the MSE training loss of a whole model.

    With ``max_entries`` each parameter tensor is checked on at most that
    many randomly chosen entries, which keeps large models tractable.
    """
    rng = rng if rng is not None else np.random.default_rng(0)
    from .losses import mse_loss

    x = np.array(x, dtype=np.float64)
    _, g = mse_loss(model.forward(x), target)
    model.backward(g)
    grads = {k: v.copy() for k, v in model.named_grads().items()}

    def loss():
        return mse_loss(model.forward(x), target)[0]

    errors = {}
    for name, p in model.named_params().items():
        idx = _sample(p.size, max_entries, rng)
        num = numeric_grad(loss, p, step, idx)
        ana = grads[name]
        if idx is not None:
            num, ana = num.ravel()[idx], ana.ravel()[idx]
        errors[name] = relative_error(ana, num)
    return errors
