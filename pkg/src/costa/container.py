"""Binary container shared by checkpoints and datasets.

Layout (all integers little-endian)::

    magic        8 bytes
    version      uint32
    header_len   uint32
    header       UTF-8 JSON, ``header_len`` bytes; lists array names/shapes
    payload      float64 little-endian, arrays concatenated in header order, row-major
    checksum     SHA-256 of everything above, 32 bytes

The JSON header is written with sorted keys so identical content gives
identical bytes.
"""

from __future__ import annotations

import hashlib
import json
import struct
from pathlib import Path

import numpy as np

_PREFIX = struct.Struct("<8sII")
_DIGEST = 32


class FormatError(ValueError):
    """File is not a valid container of the expected kind."""


class VersionError(FormatError):
    pass


def encode(magic: bytes, version: int, header: dict, arrays: dict[str, np.ndarray]) -> bytes:
    if len(magic) != 8:
        raise ValueError("magic must be exactly 8 bytes")
    layout = [[name, list(np.shape(a))] for name, a in arrays.items()]
    head = json.dumps({"meta": header, "arrays": layout}, sort_keys=True, separators=(",", ":")).encode()
    body = b"".join(np.ascontiguousarray(a, dtype="<f8").tobytes() for a in arrays.values())
    blob = _PREFIX.pack(magic, version, len(head)) + head + body
    return blob + hashlib.sha256(blob).digest()


def decode(blob: bytes, magic: bytes, version: int) -> tuple[dict, dict[str, np.ndarray]]:
    if len(blob) < _PREFIX.size + _DIGEST:
        raise FormatError("file truncated: shorter than the fixed header")
    got_magic, got_version, head_len = _PREFIX.unpack_from(blob)
    if got_magic != magic:
        raise FormatError(f"bad magic {got_magic!r}, expected {magic!r}")
    if got_version != version:
        raise VersionError(f"unsupported format version {got_version}; this reader handles version {version}")
    if hashlib.sha256(blob[:-_DIGEST]).digest() != blob[-_DIGEST:]:
        if len(blob) < _PREFIX.size + head_len + _DIGEST:
            raise FormatError("file truncated")
        raise FormatError("checksum mismatch: file is truncated or corrupted")
    start = _PREFIX.size
    doc = json.loads(blob[start : start + head_len])
    offset = start + head_len
    end = len(blob) - _DIGEST
    arrays = {}
    for name, shape in doc["arrays"]:
        count = int(np.prod(shape, dtype=np.int64))
        nbytes = 8 * count
        if offset + nbytes > end:
            raise FormatError(f"file truncated inside array {name!r}")
        arrays[name] = np.frombuffer(blob, dtype="<f8", count=count, offset=offset).reshape(shape).astype(float)
        offset += nbytes
    if offset != end:
        raise FormatError("trailing bytes after payload")
    return doc["meta"], arrays


def write(path: str | Path, magic: bytes, version: int, header: dict, arrays: dict[str, np.ndarray]) -> None:
    Path(path).write_bytes(encode(magic, version, header, arrays))


def read(path: str | Path, magic: bytes, version: int) -> tuple[dict, dict[str, np.ndarray]]:
    return decode(Path(path).read_bytes(), magic, version)
