"""Experiment configuration and its flat ``key = value`` file format.

Every field of :class:`ExperimentConfig` is a key. Lists are comma separated,
generators are octal, booleans accept true/false/yes/no/1/0, ``#`` starts a
comment. Unknown keys are an error.
"""
from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass, fields
from typing import Any

from ..channel import DEFAULT_TAPS, ChannelSpec
from ..coding import ConvCodeSpec
from ..equalizers import CnnEqualizerArch, RnnEqualizerArch, TrainConfig
from ..lms import LmsConfig

__all__ = ["VARIANTS", "ExperimentConfig", "load_config", "parse_config", "format_config"]

VARIANTS = ("none", "lms", "cnn", "rnn", "no_isi_reference")


@dataclass(frozen=True)
class ExperimentConfig:
    # code
    code_n_outputs: int = 2
    code_memory: int = 2
    code_generators: tuple[int, ...] = (0o3, 0o7)
    code_tap_order: str = "msb_current"
    # channel
    channel_taps: tuple[float, ...] = DEFAULT_TAPS
    snr_list: tuple[float, ...] = (0.0, 2.0, 4.0, 6.0, 8.0)
    # data sizes (information bits)
    train_bits: int = 480000
    test_bits: int = 1920000
    desk_scale: bool = False
    desk_train_bits: int = 48000
    desk_test_bits: int = 192000
    # what to run
    variants: tuple[str, ...] = VARIANTS
    seed: int = 2019
    output_dir: str = "runs/default"
    resume: bool = True
    mixed_snr_training: bool = False
    # LMS baseline
    lms_num_taps: int = 11
    lms_step_size: float = 0.01
    lms_reference_delay: int = 5
    lms_training_len: int = 2000
    # CNN equalizer
    cnn_conv1_filters: int = 32
    cnn_conv1_width: int = 3
    cnn_conv2_filters: int = 16
    cnn_conv2_width: int = 3
    # RNN equalizer
    rnn_lstm1_units: int = 32
    rnn_lstm2_units: int = 32
    rnn_dense_units: int = 32
    # neural training
    train_validation_fraction: float = 0.2
    train_patience: int = 5
    train_max_epochs: int = 100
    # 128 leaves only ~25 Adam steps per epoch on desk-scale data, which
    # stalls the recurrent model; 32 trains both networks reliably
    train_batch_size: int = 32
    train_learning_rate: float = 1e-3

    def __post_init__(self):
        for name in ("train_bits", "test_bits", "desk_train_bits", "desk_test_bits"):
            v = getattr(self, name)
            if v <= 0 or v % 2:
                raise ValueError(f"{name} must be positive and even, got {v}")
        if not self.snr_list:
            raise ValueError("snr_list is empty")
        if len(set(self.snr_list)) != len(self.snr_list):
            raise ValueError("snr_list has duplicates")
        bad = [v for v in self.variants if v not in VARIANTS]
        if bad:
            raise ValueError(f"unknown variants {bad}; choose from {VARIANTS}")
        if len(set(self.variants)) != len(self.variants):
            raise ValueError("variants has duplicates")
        for n_info in (self.n_train_bits, self.n_test_bits):
            if self.code_spec.coded_length(n_info) % 2:
                raise ValueError("coded length is odd; QPSK needs an even bit count")
        # build the sub-configs once so their own checks run now
        self.channel_spec(None)
        self.lms_config
        self.train_config(0)

    @property
    def n_train_bits(self) -> int:
        return self.desk_train_bits if self.desk_scale else self.train_bits

    @property
    def n_test_bits(self) -> int:
        return self.desk_test_bits if self.desk_scale else self.test_bits

    @property
    def code_spec(self) -> ConvCodeSpec:
        return ConvCodeSpec(
            n_outputs=self.code_n_outputs,
            k_inputs=1,
            m_memory=self.code_memory,
            generators=self.code_generators,
            tap_order=self.code_tap_order,
        )

    def channel_spec(self, snr_db, isi: bool = True) -> ChannelSpec:
        return ChannelSpec(taps=self.channel_taps if isi else (1.0,), snr_db=snr_db)

    @property
    def lms_config(self) -> LmsConfig:
        return LmsConfig(self.lms_num_taps, self.lms_step_size,
                         self.lms_reference_delay, self.lms_training_len)

    @property
    def cnn_arch(self) -> CnnEqualizerArch:
        return CnnEqualizerArch(self.cnn_conv1_filters, self.cnn_conv1_width,
                                self.cnn_conv2_filters, self.cnn_conv2_width)

    @property
    def rnn_arch(self) -> RnnEqualizerArch:
        return RnnEqualizerArch(self.rnn_lstm1_units, self.rnn_lstm2_units,
                                self.rnn_dense_units)

    def train_config(self, seed: int) -> TrainConfig:
        return TrainConfig(
            validation_fraction=self.train_validation_fraction,
            patience=self.train_patience,
            max_epochs=self.train_max_epochs,
            batch_size=self.train_batch_size,
            learning_rate=self.train_learning_rate,
            seed=seed,
        )

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)


_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def _parse_value(name: str, default: Any, text: str):
    text = text.strip()
    if isinstance(default, bool):
        low = text.lower()
        if low in _TRUE:
            return True
        if low in _FALSE:
            return False
        raise ValueError(f"{name}: expected a boolean, got {text!r}")
    if isinstance(default, tuple):
        items = [t.strip() for t in text.split(",") if t.strip()]
        if name == "code_generators":
            return tuple(int(t, 8) for t in items)
        if name == "variants":
            return tuple(items)
        return tuple(float(t) for t in items)
    if isinstance(default, int):
        return int(text)
    if isinstance(default, float):
        return float(text)
    return text


def _format_value(name: str, value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        if name == "code_generators":
            return ",".join(f"{g:o}" for g in value)
        return ",".join(str(v) for v in value)
    return str(value)


def parse_config(text: str, base: ExperimentConfig = ExperimentConfig(),
                 source: str = "<config>") -> ExperimentConfig:
    defaults = {f.name: getattr(base, f.name) for f in fields(ExperimentConfig)}
    changes = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{source}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in defaults:
            raise ValueError(f"{source}:{lineno}: unknown key {key!r}")
        try:
            changes[key] = _parse_value(key, defaults[key], value)
        except ValueError as exc:
            raise ValueError(f"{source}:{lineno}: {exc}") from None
    return dataclasses.replace(base, **changes)


def load_config(path: str | os.PathLike) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read(), source=str(path))


def format_config(cfg: ExperimentConfig) -> str:
    return "".join(
        f"{f.name} = {_format_value(f.name, getattr(cfg, f.name))}\n"
        for f in fields(ExperimentConfig)
    )
