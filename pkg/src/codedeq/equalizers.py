"""Window-based CNN and BiLSTM equalizers.

The received stream is cut into overlapping windows: each window carries a
6-symbol payload plus 3 guard symbols on each side (12 symbols, 2 channels
for I and Q), with a stride of 6 so every symbol is the payload of exactly one
window. A model maps a ``(2, 12)`` window to 12 reals, the payload as
``[I_0..I_5, Q_0..Q_5]``.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Union

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import check_iq, check_same_length
from .neural import (
    AdamState,
    BiLSTM,
    Conv1d,
    Dense,
    Flatten,
    ReLU,
    Sequential,
    ShapeError,
    SwapAxes,
    adam_step,
    load_weights,
    mse_loss,
    save_weights,
)

__all__ = [
    "FrameSpec",
    "Frames",
    "frame_stream",
    "make_training_pairs",
    "shuffle_pairs",
    "CnnEqualizerArch",
    "RnnEqualizerArch",
    "build_model",
    "arch_from_descriptor",
    "TrainConfig",
    "EpochRecord",
    "TrainResult",
    "TrainingDivergedError",
    "train_equalizer",
    "equalize_sequence",
    "CNNEqualizer",
    "RNNEqualizer",
    "load_equalizer",
]


@dataclass(frozen=True)
class FrameSpec:
    payload: int = 6
    guard: int = 3
    channels: int = 2

    def __post_init__(self):
        if self.payload < 1 or self.guard < 0:
            raise ValueError("payload must be >= 1 and guard >= 0")
        if self.channels != 2:
            raise ValueError("frames carry exactly two channels (I, Q)")

    @property
    def window(self) -> int:
        return self.payload + 2 * self.guard

    @property
    def stride(self) -> int:
        return self.payload

    @property
    def n_outputs(self) -> int:
        return 2 * self.payload


@dataclass
class Frames:
    windows: np.ndarray          # (K, 2, window)
    starts: np.ndarray           # (K,) first payload index of each window
    n_symbols: int
    spec: FrameSpec

    def __len__(self):
        return len(self.windows)

    def payload_indices(self, k: int) -> np.ndarray:
        """Symbol indices carried by window ``k`` (clipped to the stream)."""
        s = int(self.starts[k])
        return np.arange(s, min(s + self.spec.payload, self.n_symbols))


def frame_stream(received, spec: FrameSpec = FrameSpec()) -> Frames:
    """Cut ``received`` into windows; positions outside the stream are zero."""
    y = check_iq(received, "received", allow_empty=True)
    n = y.size
    K = math.ceil(n / spec.payload)
    padded = np.zeros(K * spec.payload + 2 * spec.guard, np.complex128)
    padded[spec.guard:spec.guard + n] = y
    idx = np.arange(K)[:, None] * spec.stride + np.arange(spec.window)[None, :]
    w = padded[idx]
    windows = np.stack([w.real, w.imag], axis=1)
    return Frames(windows, np.arange(K) * spec.stride, n, spec)


def _targets(transmitted: np.ndarray, spec: FrameSpec) -> np.ndarray:
    K = math.ceil(transmitted.size / spec.payload)
    p = np.zeros(K * spec.payload, np.complex128)
    p[:transmitted.size] = transmitted
    p = p.reshape(K, spec.payload)
    return np.concatenate([p.real, p.imag], axis=1)


def make_training_pairs(received, transmitted, spec: FrameSpec = FrameSpec()):
    """``(windows, targets)`` with targets the transmitted payload as 12 reals."""
    y = check_iq(received, "received")
    x = check_iq(transmitted, "transmitted")
    check_same_length(y, x, ("received", "transmitted"))
    return frame_stream(y, spec).windows, _targets(x, spec)


def shuffle_pairs(windows, targets, seed: int):
    perm = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(7,))).permutation(
        len(windows)
    )
    return windows[perm], targets[perm]


def _outputs_to_symbols(out: np.ndarray, frames: Frames) -> np.ndarray:
    P = frames.spec.payload
    sym = (out[:, :P] + 1j * out[:, P:]).reshape(-1)
    return sym[:frames.n_symbols]


@dataclass(frozen=True)
class CnnEqualizerArch:
    """conv(ReLU) -> conv(ReLU) -> dense(linear)."""

    conv1_filters: int = 32
    conv1_width: int = 3
    conv2_filters: int = 16
    conv2_width: int = 3
    frame: FrameSpec = field(default_factory=FrameSpec)

    kind = "cnn"

    def descriptor(self) -> dict:
        d = asdict(self)
        d["kind"] = self.kind
        return d


@dataclass(frozen=True)
class RnnEqualizerArch:
    """BiLSTM -> BiLSTM -> dense(ReLU) -> dense(linear)."""

    lstm1_units: int = 32
    lstm2_units: int = 32
    dense_units: int = 32
    frame: FrameSpec = field(default_factory=FrameSpec)

    kind = "rnn"

    def descriptor(self) -> dict:
        d = asdict(self)
        d["kind"] = self.kind
        return d


Arch = Union[CnnEqualizerArch, RnnEqualizerArch]


def arch_from_descriptor(desc: dict) -> Arch:
    desc = dict(desc)
    kind = desc.pop("kind", None)
    frame = FrameSpec(**desc.pop("frame", {}))
    try:
        if kind == "cnn":
            return CnnEqualizerArch(frame=frame, **desc)
        if kind == "rnn":
            return RnnEqualizerArch(frame=frame, **desc)
    except TypeError as exc:
        raise ValueError(f"bad architecture descriptor: {exc}") from None
    raise ValueError(f"unknown architecture kind {kind!r}")


def build_model(arch: Arch, rng: np.random.Generator) -> Sequential:
    W, C, n_out = arch.frame.window, arch.frame.channels, arch.frame.n_outputs
    if isinstance(arch, CnnEqualizerArch):
        return Sequential([
            ("conv1", Conv1d(C, arch.conv1_filters, arch.conv1_width, rng)),
            ("relu1", ReLU()),
            ("conv2", Conv1d(arch.conv1_filters, arch.conv2_filters, arch.conv2_width, rng)),
            ("relu2", ReLU()),
            ("flatten", Flatten()),
            ("out", Dense(arch.conv2_filters * W, n_out, rng)),
        ])
    if isinstance(arch, RnnEqualizerArch):
        return Sequential([
            ("time_major", SwapAxes()),
            ("bilstm1", BiLSTM(C, arch.lstm1_units, rng)),
            ("bilstm2", BiLSTM(2 * arch.lstm1_units, arch.lstm2_units, rng)),
            ("flatten", Flatten()),
            ("dense1", Dense(2 * arch.lstm2_units * W, arch.dense_units, rng)),
            ("relu1", ReLU()),
            ("out", Dense(arch.dense_units, n_out, rng)),
        ])
    raise TypeError(f"unsupported architecture {arch!r}")


@dataclass(frozen=True)
class TrainConfig:
    validation_fraction: float = 0.2
    patience: int = 5
    max_epochs: int = 100
    batch_size: int = 128
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.validation_fraction < 1.0:
            raise ValueError("validation_fraction must be in (0, 1)")
        if self.patience < 1:
            raise ValueError("patience must be >= 1")
        if self.max_epochs < 1 or self.batch_size < 1:
            raise ValueError("max_epochs and batch_size must be >= 1")


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    train_loss: float
    val_loss: float


@dataclass
class TrainResult:
    model: Sequential
    arch: Arch
    log: list
    best_epoch: int

    @property
    def stopped_epoch(self) -> int:
        return self.log[-1].epoch


class TrainingDivergedError(RuntimeError):
    pass


def _rng(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=key))


def train_equalizer(arch: Arch, windows, targets, cfg: TrainConfig = TrainConfig()) -> TrainResult:
    """Mini-batch Adam on MSE with a held-out split and early stopping.

    The pairs are shuffled once with ``cfg.seed``; the last
    ``validation_fraction`` of that order is the validation set. Training
    stops after ``patience`` epochs without a strict validation improvement
    and the best-validation parameters are restored.
    """
    X = np.asarray(windows, dtype=np.float64)
    Y = np.asarray(targets, dtype=np.float64)
    if len(X) == 0:
        raise ValueError("empty training set")
    if len(X) != len(Y):
        raise ShapeError(f"{len(X)} windows but {len(Y)} targets")
    expected_in = (arch.frame.channels, arch.frame.window)
    if X.shape[1:] != expected_in or Y.shape[1:] != (arch.frame.n_outputs,):
        raise ShapeError(
            f"expected windows (*, {expected_in}) and targets (*, {arch.frame.n_outputs}), "
            f"got {X.shape} and {Y.shape}"
        )
    X, Y = shuffle_pairs(X, Y, cfg.seed)
    n_val = min(max(1, int(round(cfg.validation_fraction * len(X)))), len(X) - 1)
    n_train = len(X) - n_val
    if n_train < cfg.batch_size:
        raise ValueError(f"{n_train} training pairs is smaller than one batch ({cfg.batch_size})")
    Xtr, Ytr, Xv, Yv = X[:n_train], Y[:n_train], X[n_train:], Y[n_train:]

    model = build_model(arch, _rng(cfg.seed, 1))
    params = model.named_params()
    opt = AdamState(cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.eps)
    order_rng = _rng(cfg.seed, 2)

    log = []
    best_val = math.inf
    best_params = model.get_params()
    best_epoch = 0
    since_best = 0
    for epoch in range(1, cfg.max_epochs + 1):
        perm = order_rng.permutation(n_train)
        total = 0.0
        for s in range(0, n_train, cfg.batch_size):
            b = perm[s:s + cfg.batch_size]
            loss, g = mse_loss(model.forward(Xtr[b]), Ytr[b])
            if not math.isfinite(loss):
                raise TrainingDivergedError(f"non-finite training loss at epoch {epoch}")
            model.backward(g)
            adam_step(opt, params, model.named_grads())
            total += loss * len(b)
        val_loss = mse_loss(model.predict(Xv), Yv)[0]
        if not math.isfinite(val_loss):
            raise TrainingDivergedError(f"non-finite validation loss at epoch {epoch}")
        log.append(EpochRecord(epoch, total / n_train, val_loss))
        if val_loss < best_val:
            best_val, best_epoch, since_best = val_loss, epoch, 0
            best_params = model.get_params()
        else:
            since_best += 1
            if since_best >= cfg.patience:
                break
    model.set_params(best_params)
    return TrainResult(model, arch, log, best_epoch)


def equalize_sequence(model: Sequential, received, spec: FrameSpec = FrameSpec(),
                      batch_size: int = 1024) -> np.ndarray:
    """Equalize a whole stream window by window; returns len(received) symbols."""
    frames = frame_stream(received, spec)
    if len(frames) == 0:
        return np.zeros(0, np.complex128)
    out = model.predict(frames.windows, batch_size)
    if out.shape[1] != spec.n_outputs:
        raise ShapeError(f"model emits {out.shape[1]} values, frame needs {spec.n_outputs}")
    return _outputs_to_symbols(out, frames)


class _NeuralEqualizer(BaseEstimator):
    """Shared fit/predict for the window-based equalizers."""

    def _arch(self) -> Arch:
        raise NotImplementedError

    def _train_config(self) -> TrainConfig:
        return TrainConfig(
            validation_fraction=self.validation_fraction,
            patience=self.patience,
            max_epochs=self.max_epochs,
            batch_size=self.batch_size,
            learning_rate=self.learning_rate,
            seed=self.random_state,
        )

    def fit(self, X, y):
        """Train on received symbols ``X`` against transmitted symbols ``y``."""
        arch = self._arch()
        windows, targets = make_training_pairs(X, y, arch.frame)
        result = train_equalizer(arch, windows, targets, self._train_config())
        self.model_ = result.model
        self.arch_ = arch
        self.training_log_ = result.log
        self.best_epoch_ = result.best_epoch
        return self

    def fit_pairs(self, windows, targets):
        """Train on ready-made ``(windows, targets)``, e.g. pooled over SNRs."""
        arch = self._arch()
        result = train_equalizer(arch, windows, targets, self._train_config())
        self.model_, self.arch_ = result.model, arch
        self.training_log_, self.best_epoch_ = result.log, result.best_epoch
        return self

    def predict(self, X) -> np.ndarray:
        check_is_fitted(self, "model_")
        return equalize_sequence(self.model_, X, self.arch_.frame)

    def save(self, path) -> None:
        check_is_fitted(self, "model_")
        save_weights(path, self.model_.named_params(), self.arch_.descriptor())


class CNNEqualizer(_NeuralEqualizer):
    def __init__(self, conv1_filters=32, conv1_width=3, conv2_filters=16, conv2_width=3,
                 max_epochs=100, patience=5, batch_size=128, learning_rate=1e-3,
                 validation_fraction=0.2, random_state=0):
        self.conv1_filters = conv1_filters
        self.conv1_width = conv1_width
        self.conv2_filters = conv2_filters
        self.conv2_width = conv2_width
        self.max_epochs = max_epochs
        self.patience = patience
        self.batch_size = batch_size
        self.learning_rate = learning_rate
        self.validation_fraction = validation_fraction
        self.random_state = random_state

    def _arch(self):
        return CnnEqualizerArch(self.conv1_filters, self.conv1_width,
                                self.conv2_filters, self.conv2_width)


class RNNEqualizer(_NeuralEqualizer):
    def __init__(self, lstm1_units=32, lstm2_units=32, dense_units=32,
                 max_epochs=100, patience=5, batch_size=128, learning_rate=1e-3,
                 validation_fraction=0.2, random_state=0):
        self.lstm1_units = lstm1_units
        self.lstm2_units = lstm2_units
        self.dense_units = dense_units
        self.max_epochs = max_epochs
        self.patience = patience
        self.batch_size = batch_size
        self.learning_rate = learning_rate
        self.validation_fraction = validation_fraction
        self.random_state = random_state

    def _arch(self):
        return RnnEqualizerArch(self.lstm1_units, self.lstm2_units, self.dense_units)


def load_equalizer(path) -> _NeuralEqualizer:
    """Rebuild a fitted CNN/RNN equalizer from a weight file."""
    desc, params = load_weights(path)
    arch = arch_from_descriptor(desc)
    model = build_model(arch, np.random.default_rng(0))
    model.set_params(params)
    if isinstance(arch, CnnEqualizerArch):
        est = CNNEqualizer(arch.conv1_filters, arch.conv1_width, arch.conv2_filters,
                           arch.conv2_width)
    else:
        est = RNNEqualizer(arch.lstm1_units, arch.lstm2_units, arch.dense_units)
    est.model_, est.arch_ = model, arch
    est.training_log_, est.best_epoch_ = [], 0
    return est
