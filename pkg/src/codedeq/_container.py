"""Binary container shared by weight files and dataset files.

Layout (all integers little-endian)::

    magic        4 bytes
    version      uint16
    reserved     uint16 (zero)
    header_len   uint32
    header       UTF-8 JSON, sorted keys, compact separators
    header_crc   uint32 (CRC-32 of header bytes)
    payload      header["payload_bytes"] bytes
    payload_crc  uint32 (CRC-32 of payload)
"""
from __future__ import annotations

import json
import os
import struct
import zlib

_PREFIX = struct.Struct("<4sHHI")
_CRC = struct.Struct("<I")


class FormatError(ValueError):
    """A container file is malformed, corrupted or of the wrong kind."""


def encode_header(header: dict) -> bytes:
    return json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")


def pack(magic: bytes, version: int, header: dict, payload: bytes) -> bytes:
    header = dict(header, payload_bytes=len(payload))
    hb = encode_header(header)
    return b"".join([
        _PREFIX.pack(magic, version, 0, len(hb)),
        hb,
        _CRC.pack(zlib.crc32(hb)),
        payload,
        _CRC.pack(zlib.crc32(payload)),
    ])


def unpack(blob: bytes, magic: bytes, versions=(1,), source: str = "<bytes>"):
    """Validate ``blob`` and return ``(version, header, payload)``."""
    if len(blob) < _PREFIX.size:
        raise FormatError(f"{source}: file too short for a header")
    got_magic, version, reserved, hlen = _PREFIX.unpack_from(blob, 0)
    if got_magic != magic:
        raise FormatError(f"{source}: bad magic {got_magic!r}, expected {magic!r}")
    if version not in versions:
        raise FormatError(f"{source}: unsupported format version {version}")
    if reserved != 0:
        raise FormatError(f"{source}: reserved field is {reserved}, expected 0")
    start = _PREFIX.size
    end = start + hlen
    if end + _CRC.size > len(blob):
        raise FormatError(f"{source}: header length {hlen} exceeds file size")
    hb = blob[start:end]
    (hcrc,) = _CRC.unpack_from(blob, end)
    if zlib.crc32(hb) != hcrc:
        raise FormatError(f"{source}: header checksum mismatch")
    try:
        header = json.loads(hb.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"{source}: header is not valid JSON ({exc})") from None
    if not isinstance(header, dict) or "payload_bytes" not in header:
        raise FormatError(f"{source}: header lacks payload_bytes")
    pstart = end + _CRC.size
    pend = pstart + int(header["payload_bytes"])
    if pend + _CRC.size != len(blob):
        raise FormatError(f"{source}: payload length does not match header")
    payload = blob[pstart:pend]
    (pcrc,) = _CRC.unpack_from(blob, pend)
    if zlib.crc32(payload) != pcrc:
        raise FormatError(f"{source}: payload checksum mismatch")
    return version, header, payload


def write_file(path, blob: bytes) -> None:
    path = os.fspath(path)
    tmp = path + ".tmp"
    try:
        with open(tmp, "wb") as fh:
            fh.write(blob)
        os.replace(tmp, path)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def read_file(path) -> bytes:
    path = os.fspath(path)
    try:
        with open(path, "rb") as fh:
            return fh.read()
    except OSError as exc:
        raise OSError(f"cannot read {path}: {exc}") from exc
