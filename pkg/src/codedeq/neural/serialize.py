"""Versioned weight files: architecture descriptor + little-endian float64 data."""
from __future__ import annotations

from collections import OrderedDict

import numpy as np

from .._container import FormatError, pack, read_file, unpack, write_file

__all__ = ["WEIGHTS_MAGIC", "WEIGHTS_VERSION", "dumps_weights", "loads_weights",
           "save_weights", "load_weights", "FormatError"]

WEIGHTS_MAGIC = b"CDQW"
WEIGHTS_VERSION = 1


def dumps_weights(params, arch: dict) -> bytes:
    entries = []
    chunks = []
    for name, arr in params.items():
        arr = np.asarray(arr, dtype="<f8")
        if not np.all(np.isfinite(arr)):
            raise ValueError(f"parameter {name} has non-finite values")
        entries.append({"name": name, "shape": list(arr.shape)})
        chunks.append(np.ascontiguousarray(arr).tobytes())
    header = {"kind": "weights", "arch": arch, "params": entries, "dtype": "<f8"}
    return pack(WEIGHTS_MAGIC, WEIGHTS_VERSION, header, b"".join(chunks))


def loads_weights(blob: bytes, source: str = "<bytes>"):
    """Return ``(arch, params)`` where params is an OrderedDict of arrays."""
    _, header, payload = unpack(blob, WEIGHTS_MAGIC, (WEIGHTS_VERSION,), source)
    if header.get("kind") != "weights" or header.get("dtype") != "<f8":
        raise FormatError(f"{source}: not a float64 weight file")
    params = OrderedDict()
    offset = 0
    try:
        for entry in header["params"]:
            shape = tuple(int(s) for s in entry["shape"])
            n = int(np.prod(shape, dtype=np.int64)) * 8
            if offset + n > len(payload):
                raise FormatError(f"{source}: parameter data truncated")
            params[entry["name"]] = (
                np.frombuffer(payload, "<f8", n // 8, offset).reshape(shape).astype(np.float64)
            )
            offset += n
    except (KeyError, TypeError) as exc:
        raise FormatError(f"{source}: malformed parameter table ({exc})") from None
    if offset != len(payload):
        raise FormatError(f"{source}: {len(payload) - offset} trailing payload bytes")
    return header["arch"], params


def save_weights(path, params, arch: dict) -> None:
    write_file(path, dumps_weights(params, arch))


def load_weights(path):
    return loads_weights(read_file(path), source=str(path))
