"""LSTM cell, unidirectional LSTM layer with BPTT, and the bidirectional wrapper.

Per time step, with sigma the logistic function::

    i = sigma(U_i x + V_i h_prev + b_i)
    o = sigma(U_o x + V_o h_prev + b_o)
    f = sigma(U_f x + V_f h_prev + b_f)
    c = i * tanh(U_c x + V_c h_prev + b_c) + f * c_prev
    h = o * tanh(c)

``U_*`` have shape (H, D), ``V_*`` (H, H) and ``b_*`` (H,).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .layers import Layer, ShapeError

__all__ = ["GATES", "LstmCellParams", "lstm_step", "LSTM", "BiLSTM", "bilstm_forward", "sigmoid"]

GATES = ("i", "o", "f", "c")


def sigmoid(x):
    # split by sign to avoid overflow in exp
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    e = np.exp(x[~pos])
    out[~pos] = e / (1.0 + e)
    return out


@dataclass
class LstmCellParams:
    U_i: np.ndarray
    U_o: np.ndarray
    U_f: np.ndarray
    U_c: np.ndarray
    V_i: np.ndarray
    V_o: np.ndarray
    V_f: np.ndarray
    V_c: np.ndarray
    b_i: np.ndarray
    b_o: np.ndarray
    b_f: np.ndarray
    b_c: np.ndarray

    def __post_init__(self):
        H, D = self.U_i.shape
        for g in GATES:
            if getattr(self, f"U_{g}").shape != (H, D):
                raise ShapeError(f"U_{g} must have shape {(H, D)}")
            if getattr(self, f"V_{g}").shape != (H, H):
                raise ShapeError(f"V_{g} must have shape {(H, H)}")
            if getattr(self, f"b_{g}").shape != (H,):
                raise ShapeError(f"b_{g} must have shape {(H,)}")

    @property
    def hidden_size(self) -> int:
        return self.U_i.shape[0]

    @property
    def input_size(self) -> int:
        return self.U_i.shape[1]

    @classmethod
    def init(cls, input_size: int, hidden_size: int, rng: np.random.Generator,
             forget_bias: float = 1.0) -> "LstmCellParams":
        """Uniform(+-1/sqrt(H)) matrices, zero biases except the forget gate."""
        lim = 1.0 / np.sqrt(hidden_size)
        kw = {}
        for g in GATES:
            kw[f"U_{g}"] = rng.uniform(-lim, lim, (hidden_size, input_size))
        for g in GATES:
            kw[f"V_{g}"] = rng.uniform(-lim, lim, (hidden_size, hidden_size))
        for g in GATES:
            kw[f"b_{g}"] = np.full(hidden_size, forget_bias if g == "f" else 0.0)
        return cls(**kw)

    @classmethod
    def zeros(cls, input_size: int, hidden_size: int) -> "LstmCellParams":
        kw = {}
        for g in GATES:
            kw[f"U_{g}"] = np.zeros((hidden_size, input_size))
            kw[f"V_{g}"] = np.zeros((hidden_size, hidden_size))
            kw[f"b_{g}"] = np.zeros(hidden_size)
        return cls(**kw)

    def as_dict(self) -> dict:
        return {f"{k}_{g}": getattr(self, f"{k}_{g}") for k in "UVb" for g in GATES}

    def stacked(self):
        U = np.concatenate([getattr(self, f"U_{g}") for g in GATES], axis=0)
        V = np.concatenate([getattr(self, f"V_{g}") for g in GATES], axis=0)
        b = np.concatenate([getattr(self, f"b_{g}") for g in GATES])
        return U, V, b


def _gates(a: np.ndarray, H: int):
    i = sigmoid(a[..., :H])
    o = sigmoid(a[..., H:2 * H])
    f = sigmoid(a[..., 2 * H:3 * H])
    g = np.tanh(a[..., 3 * H:])
    return i, o, f, g


def lstm_step(p: LstmCellParams, x_t, h_prev, c_prev):
    """One cell update; inputs may be single vectors or (batch, ...) arrays."""
    x_t, h_prev, c_prev = (np.asarray(a, dtype=np.float64) for a in (x_t, h_prev, c_prev))
    H, D = p.hidden_size, p.input_size
    if x_t.shape[-1] != D or h_prev.shape[-1] != H or c_prev.shape[-1] != H:
        raise ShapeError(
            f"lstm_step expects x[..., {D}], h[..., {H}], c[..., {H}]; got "
            f"{x_t.shape}, {h_prev.shape}, {c_prev.shape}"
        )
    U, V, b = p.stacked()
    i, o, f, g = _gates(x_t @ U.T + h_prev @ V.T + b, H)
    c_t = i * g + f * c_prev
    h_t = o * np.tanh(c_t)
    return h_t, c_t


class LSTM(Layer):
    """Unidirectional LSTM over (batch, T, D) input; returns all hidden states.

    With ``reverse=True`` the sequence is processed from t=T-1 down to 0 and
    the output keeps the original time indexing. Initial h and c are zero.
    """

    def __init__(self, input_size: int, hidden_size: int,
                 rng: Optional[np.random.Generator] = None, reverse: bool = False):
        super().__init__()
        self.input_size, self.hidden_size, self.reverse = input_size, hidden_size, reverse
        rng = rng if rng is not None else np.random.default_rng(0)
        self.params.update(LstmCellParams.init(input_size, hidden_size, rng).as_dict())

    @property
    def cell(self) -> LstmCellParams:
        return LstmCellParams(**self.params)

    def forward(self, x):
        if x.ndim != 3 or x.shape[-1] != self.input_size:
            raise ShapeError(f"LSTM expects (batch, T, {self.input_size}), got {x.shape}")
        B, T, _ = x.shape
        H = self.hidden_size
        U, V, b = self.cell.stacked()
        pre = x @ U.T + b
        acts = np.empty((B, T, 4 * H))
        cs = np.empty((B, T, H))
        c_prevs = np.empty((B, T, H))
        h_prevs = np.empty((B, T, H))
        hs = np.empty((B, T, H))
        h = np.zeros((B, H))
        c = np.zeros((B, H))
        order = range(T - 1, -1, -1) if self.reverse else range(T)
        for t in order:
            i, o, f, g = _gates(pre[:, t] + h @ V.T, H)
            h_prevs[:, t], c_prevs[:, t] = h, c
            c = i * g + f * c
            h = o * np.tanh(c)
            acts[:, t, :H], acts[:, t, H:2 * H] = i, o
            acts[:, t, 2 * H:3 * H], acts[:, t, 3 * H:] = f, g
            cs[:, t], hs[:, t] = c, h
        self._cache = (x, acts, cs, c_prevs, h_prevs)
        return hs

    def backward(self, dy):
        x, acts, cs, c_prevs, h_prevs = self._take_cache()
        B, T, _ = x.shape
        H = self.hidden_size
        U, V, _ = self.cell.stacked()
        da = np.empty((B, T, 4 * H))
        dh_next = np.zeros((B, H))
        dc_next = np.zeros((B, H))
        order = range(T) if self.reverse else range(T - 1, -1, -1)
        for t in order:
            i, o = acts[:, t, :H], acts[:, t, H:2 * H]
            f, g = acts[:, t, 2 * H:3 * H], acts[:, t, 3 * H:]
            tc = np.tanh(cs[:, t])
            dh = dy[:, t] + dh_next
            dc = dc_next + dh * o * (1.0 - tc * tc)
            da[:, t, :H] = dc * g * i * (1.0 - i)
            da[:, t, H:2 * H] = dh * tc * o * (1.0 - o)
            da[:, t, 2 * H:3 * H] = dc * c_prevs[:, t] * f * (1.0 - f)
            da[:, t, 3 * H:] = dc * i * (1.0 - g * g)
            dh_next = da[:, t] @ V
            dc_next = dc * f
        da2 = da.reshape(-1, 4 * H)
        dU = da2.T @ x.reshape(-1, self.input_size)
        dV = da2.T @ h_prevs.reshape(-1, H)
        db = da2.sum(axis=0)
        for k, gate in enumerate(GATES):
            sl = slice(k * H, (k + 1) * H)
            self.grads[f"U_{gate}"] = dU[sl]
            self.grads[f"V_{gate}"] = dV[sl]
            self.grads[f"b_{gate}"] = db[sl]
        return da @ U

    def config(self):
        return {"input_size": self.input_size, "hidden_size": self.hidden_size,
                "reverse": self.reverse}


class BiLSTM(Layer):
    """Forward and time-reversed LSTMs; outputs concatenated as [fwd, bwd]."""

    def __init__(self, input_size: int, hidden_size: int,
                 rng: Optional[np.random.Generator] = None):
        super().__init__()
        rng = rng if rng is not None else np.random.default_rng(0)
        self.input_size, self.hidden_size = input_size, hidden_size
        self.fwd = LSTM(input_size, hidden_size, rng)
        self.bwd = LSTM(input_size, hidden_size, rng, reverse=True)
        # share the arrays so in-place updates reach the sub-layers
        for prefix, sub in (("fwd", self.fwd), ("bwd", self.bwd)):
            for k, v in sub.params.items():
                self.params[f"{prefix}.{k}"] = v

    def forward(self, x):
        self._cache = True
        return np.concatenate([self.fwd.forward(x), self.bwd.forward(x)], axis=-1)

    def backward(self, dy):
        self._take_cache()
        H = self.hidden_size
        dx = self.fwd.backward(dy[..., :H]) + self.bwd.backward(dy[..., H:])
        for prefix, sub in (("fwd", self.fwd), ("bwd", self.bwd)):
            for k, v in sub.grads.items():
                self.grads[f"{prefix}.{k}"] = v
        return dx

    def config(self):
        return {"input_size": self.input_size, "hidden_size": self.hidden_size}


def bilstm_forward(fwd: LstmCellParams, bwd: LstmCellParams, x) -> np.ndarray:
    """Run a bidirectional LSTM over a single (T, D) sequence -> (T, 2H)."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise ShapeError(f"expected (T, D) input, got {x.shape}")
    if fwd.input_size != x.shape[1] or bwd.input_size != x.shape[1]:
        raise ShapeError("cell input size does not match x")
    if fwd.hidden_size != bwd.hidden_size:
        raise ShapeError("forward and backward cells differ in hidden size")
    layer = BiLSTM(x.shape[1], fwd.hidden_size)
    for prefix, cell in (("fwd", fwd), ("bwd", bwd)):
        for k, v in cell.as_dict().items():
            layer.params[f"{prefix}.{k}"][...] = v
    return layer.forward(x[None])[0]
