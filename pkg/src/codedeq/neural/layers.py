"""Feed-forward layers with hand-written backward passes.

Arrays are float64 numpy arrays with a leading batch axis. Every layer caches
what its backward pass needs during ``forward``; ``backward`` overwrites
``grads`` and returns the gradient w.r.t. the layer input.
"""
from __future__ import annotations

from collections import OrderedDict
from typing import Iterable, Optional

import numpy as np

__all__ = [
    "ShapeError",
    "Layer",
    "Conv1d",
    "Dense",
    "ReLU",
    "Flatten",
    "SwapAxes",
    "Sequential",
    "relu",
    "conv1d_forward",
    "dense_forward",
    "glorot_uniform",
]


class ShapeError(ValueError):
    pass


def glorot_uniform(rng: np.random.Generator, shape, fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


class Layer:
    """Base class. Subclasses fill ``params`` and implement forward/backward."""

    def __init__(self):
        self.params: "OrderedDict[str, np.ndarray]" = OrderedDict()
        self.grads: "OrderedDict[str, np.ndarray]" = OrderedDict()
        self._cache = None

    def forward(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def backward(self, dy: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _take_cache(self):
        if self._cache is None:
            raise RuntimeError(f"{type(self).__name__}.backward called before forward")
        return self._cache

    def config(self) -> dict:
        return {}


class Conv1d(Layer):
    """1-D cross-correlation (no kernel flip) with 'same' zero padding.

    ``y[b,o,t] = bias[o] + sum_{i,k} kernels[o,i,k] * x[b,i,t+k-left]`` with
    ``left = (width-1)//2``.
    """

    def __init__(self, in_channels: int, out_channels: int, width: int,
                 rng: Optional[np.random.Generator] = None):
        super().__init__()
        self.in_channels, self.out_channels, self.width = in_channels, out_channels, width
        rng = rng if rng is not None else np.random.default_rng(0)
        fan_in, fan_out = in_channels * width, out_channels * width
        self.params["kernels"] = glorot_uniform(
            rng, (out_channels, in_channels, width), fan_in, fan_out
        )
        self.params["bias"] = np.zeros(out_channels)

    @property
    def pad(self) -> tuple[int, int]:
        left = (self.width - 1) // 2
        return left, self.width - 1 - left

    def _columns(self, x: np.ndarray) -> np.ndarray:
        left, right = self.pad
        T = x.shape[-1]
        xp = np.pad(x, ((0, 0), (0, 0), (left, right)))
        # (B, C_in, width, T) -> (B, C_in*width, T)
        cols = np.stack([xp[:, :, k:k + T] for k in range(self.width)], axis=2)
        return cols.reshape(x.shape[0], -1, T)

    def forward(self, x):
        if x.ndim != 3 or x.shape[1] != self.in_channels:
            raise ShapeError(
                f"Conv1d expects (batch, {self.in_channels}, T), got {x.shape}"
            )
        cols = self._columns(x)
        K = self.params["kernels"].reshape(self.out_channels, -1)
        y = np.matmul(K, cols) + self.params["bias"][:, None]
        self._cache = (cols, x.shape)
        return y

    def backward(self, dy):
        cols, xshape = self._take_cache()
        B, C, T = xshape
        K = self.params["kernels"].reshape(self.out_channels, -1)
        self.grads["kernels"] = np.einsum("bot,bjt->oj", dy, cols).reshape(
            self.params["kernels"].shape
        )
        self.grads["bias"] = dy.sum(axis=(0, 2))
        dcols = np.matmul(K.T, dy).reshape(B, C, self.width, T)
        left, right = self.pad
        dxp = np.zeros((B, C, T + left + right))
        for k in range(self.width):
            dxp[:, :, k:k + T] += dcols[:, :, k, :]
        return dxp[:, :, left:left + T]

    def config(self):
        return {"in_channels": self.in_channels, "out_channels": self.out_channels,
                "width": self.width}


class Dense(Layer):
    """Affine map ``y = x @ W.T + b`` with ``W`` of shape (out, in)."""

    def __init__(self, in_features: int, out_features: int,
                 rng: Optional[np.random.Generator] = None):
        super().__init__()
        self.in_features, self.out_features = in_features, out_features
        rng = rng if rng is not None else np.random.default_rng(0)
        self.params["weights"] = glorot_uniform(
            rng, (out_features, in_features), in_features, out_features
        )
        self.params["bias"] = np.zeros(out_features)

    def forward(self, x):
        if x.shape[-1] != self.in_features:
            raise ShapeError(f"Dense expects last axis {self.in_features}, got {x.shape}")
        self._cache = x
        return x @ self.params["weights"].T + self.params["bias"]

    def backward(self, dy):
        x = self._take_cache()
        x2 = x.reshape(-1, self.in_features)
        dy2 = dy.reshape(-1, self.out_features)
        self.grads["weights"] = dy2.T @ x2
        self.grads["bias"] = dy2.sum(axis=0)
        return dy @ self.params["weights"]

    def config(self):
        return {"in_features": self.in_features, "out_features": self.out_features}


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


class ReLU(Layer):
    def forward(self, x):
        self._cache = x > 0
        return np.where(self._cache, x, 0.0)

    def backward(self, dy):
        return np.where(self._take_cache(), dy, 0.0)


class Flatten(Layer):
    def forward(self, x):
        self._cache = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, dy):
        return dy.reshape(self._take_cache())


class SwapAxes(Layer):
    """Swap the two trailing axes, e.g. (B, C, T) -> (B, T, C)."""

    def forward(self, x):
        self._cache = True
        return np.swapaxes(x, -1, -2)

    def backward(self, dy):
        self._take_cache()
        return np.swapaxes(dy, -1, -2)


class Sequential:
    """Named chain of layers; parameters are addressed as ``"<layer>.<param>"``."""

    def __init__(self, layers: Iterable[tuple[str, Layer]]):
        self.layers: "OrderedDict[str, Layer]" = OrderedDict(layers)

    def forward(self, x):
        for layer in self.layers.values():
            x = layer.forward(x)
        return x

    __call__ = forward

    def backward(self, dy):
        for layer in reversed(self.layers.values()):
            dy = layer.backward(dy)
        return dy

    def predict(self, x, batch_size: int = 1024) -> np.ndarray:
        if len(x) == 0:
            raise ShapeError("empty input batch")
        outs = [self.forward(x[i:i + batch_size]) for i in range(0, len(x), batch_size)]
        return np.concatenate(outs, axis=0)

    def named_params(self) -> "OrderedDict[str, np.ndarray]":
        out = OrderedDict()
        for lname, layer in self.layers.items():
            for pname, arr in layer.params.items():
                out[f"{lname}.{pname}"] = arr
        return out

    def named_grads(self) -> "OrderedDict[str, np.ndarray]":
        out = OrderedDict()
        for lname, layer in self.layers.items():
            for pname in layer.params:
                if pname not in layer.grads:
                    raise RuntimeError(f"no gradient for {lname}.{pname}; run backward first")
                out[f"{lname}.{pname}"] = layer.grads[pname]
        return out

    def get_params(self) -> "OrderedDict[str, np.ndarray]":
        """Deep copy of all parameters."""
        return OrderedDict((k, v.copy()) for k, v in self.named_params().items())

    def set_params(self, params) -> None:
        current = self.named_params()
        if list(params) != list(current):
            raise ShapeError("parameter names do not match the model")
        for name, value in params.items():
            value = np.asarray(value, dtype=np.float64)
            if value.shape != current[name].shape:
                raise ShapeError(
                    f"{name}: expected shape {current[name].shape}, got {value.shape}"
                )
            current[name][...] = value

    @property
    def num_params(self) -> int:
        return sum(v.size for v in self.named_params().values())


def conv1d_forward(layer: Conv1d, x: np.ndarray) -> np.ndarray:
    """Forward a single (C_in, T) input or a (B, C_in, T) batch."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 2:
        return layer.forward(x[None])[0]
    return layer.forward(x)


def dense_forward(layer: Dense, x: np.ndarray) -> np.ndarray:
    return layer.forward(np.asarray(x, dtype=np.float64))
