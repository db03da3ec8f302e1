"""Dataset generation and the binary dataset container.

A dataset holds the four streams of one (role, SNR) point: information bits,
coded bits, transmitted symbols and received symbols. Payload order is
info (uint8), coded (uint8), tx (complex128 LE), rx (complex128 LE).
A JSON sidecar ``<file>.json`` repeats the header for humans.
"""
from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .._container import FormatError, pack, read_file, unpack, write_file
from ..channel import SeededRng, transmit
from ..coding import conv_encode
from ..modem import qpsk_modulate
from .config import ExperimentConfig

__all__ = [
    "ROLES",
    "Dataset",
    "dataset_meta",
    "generate_dataset",
    "dumps_dataset",
    "loads_dataset",
    "save_dataset",
    "load_dataset",
    "snr_key",
    "spec_hash",
]

DATASET_MAGIC = b"CDQD"
DATASET_VERSION = 1
ROLES = {"train": 1, "test": 2}


def snr_key(snr_db: float) -> int:
    """Non-negative integer id of an SNR point (milli-dB offset by 10^6)."""
    key = int(round(snr_db * 1000)) + 1_000_000
    if key < 0:
        raise ValueError(f"SNR {snr_db} dB out of range")
    return key


def spec_hash(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]


@dataclass
class Dataset:
    info: np.ndarray
    coded: np.ndarray
    tx: np.ndarray
    rx: np.ndarray
    meta: dict

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return self.meta == other.meta and all(
            np.array_equal(getattr(self, k), getattr(other, k))
            for k in ("info", "coded", "tx", "rx")
        )


def dataset_meta(cfg: ExperimentConfig, role: str, snr_db: Optional[float],
                 seed: Optional[int] = None, isi: bool = True) -> dict:
    """Metadata a dataset generated with these arguments carries."""
    if role not in ROLES:
        raise ValueError(f"role must be one of {sorted(ROLES)}, got {role!r}")
    code = cfg.code_spec
    chan = cfg.channel_spec(snr_db, isi=isi)
    n_info = cfg.n_train_bits if role == "train" else cfg.n_test_bits
    n_coded = code.coded_length(n_info)
    return {
        "role": role,
        "snr_db": snr_db,
        "seed": cfg.seed if seed is None else int(seed),
        "isi": isi,
        "rng": SeededRng.algorithm,
        "code": code.describe(),
        "code_hash": spec_hash(code.describe()),
        "channel_taps": list(chan.taps),
        "channel_hash": spec_hash(repr(chan.taps)),
        "n_info": n_info,
        "n_coded": n_coded,
        "n_symbols": n_coded // 2,
    }


def generate_dataset(cfg: ExperimentConfig, role: str, snr_db: Optional[float],
                     seed: Optional[int] = None, isi: bool = True) -> Dataset:
    """info bits -> conv_encode -> QPSK -> channel.

    The bit and noise streams depend only on (seed, role, SNR), so the
    ``isi=False`` reference sees the same bits and the same noise samples as
    the ISI channel. ``snr_db=None`` gives a noiseless channel.
    """
    meta = dataset_meta(cfg, role, snr_db, seed, isi)
    rng = SeededRng(meta["seed"], (ROLES[role], snr_key(snr_db) if snr_db is not None else 0))
    info = rng.child(0).bits(meta["n_info"])
    coded = conv_encode(info, cfg.code_spec)
    tx = qpsk_modulate(coded)
    rx = transmit(tx, cfg.channel_spec(snr_db, isi=isi), rng.child(1))
    return Dataset(info, coded, tx, rx, meta)


def dumps_dataset(ds: Dataset) -> bytes:
    header = {"kind": "dataset", "meta": ds.meta}
    payload = b"".join([
        ds.info.astype(np.uint8).tobytes(),
        ds.coded.astype(np.uint8).tobytes(),
        ds.tx.astype("<c16").tobytes(),
        ds.rx.astype("<c16").tobytes(),
    ])
    return pack(DATASET_MAGIC, DATASET_VERSION, header, payload)


def loads_dataset(blob: bytes, source: str = "<bytes>") -> Dataset:
    _, header, payload = unpack(blob, DATASET_MAGIC, (DATASET_VERSION,), source)
    try:
        if header["kind"] != "dataset":
            raise FormatError(f"{source}: not a dataset file")
        meta = header["meta"]
        n_info, n_coded, n_sym = (int(meta[k]) for k in ("n_info", "n_coded", "n_symbols"))
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"{source}: malformed dataset header ({exc})") from None
    sizes = [n_info, n_coded, 16 * n_sym, 16 * n_sym]
    if sum(sizes) != len(payload) or min(sizes) < 0:
        raise FormatError(f"{source}: stream lengths do not match payload size")
    offs = np.cumsum([0] + sizes)
    info = np.frombuffer(payload, np.uint8, n_info, offs[0]).copy()
    coded = np.frombuffer(payload, np.uint8, n_coded, offs[1]).copy()
    tx = np.frombuffer(payload, "<c16", n_sym, offs[2]).astype(np.complex128)
    rx = np.frombuffer(payload, "<c16", n_sym, offs[3]).astype(np.complex128)
    return Dataset(info, coded, tx, rx, meta)


def save_dataset(path, ds: Dataset) -> None:
    path = Path(path)
    write_file(path, dumps_dataset(ds))
    sidecar = json.dumps(ds.meta, indent=2, sort_keys=True) + "\n"
    write_file(str(path) + ".json", sidecar.encode("utf-8"))


def load_dataset(path) -> Dataset:
    return loads_dataset(read_file(path), source=os.fspath(path))
