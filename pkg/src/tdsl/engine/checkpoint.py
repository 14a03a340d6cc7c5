"""Flat binary parameter container.

Layout (all integers little-endian):

    magic      8 bytes   b"TDSLCKPT"
    version    uint32    currently 1
    n_entries  uint32
    entry * n_entries:
        name_len   uint16
        name       utf-8 bytes
        ndim       uint8
        dims       uint32 * ndim
    payload * n_entries: row-major float64 little-endian, manifest order
"""

from __future__ import annotations

import struct
from pathlib import Path
from typing import Mapping

import numpy as np

from tdsl.errors import ParseError

MAGIC = b"TDSLCKPT"
VERSION = 1


def save_params(path, params: Mapping[str, np.ndarray]) -> None:
    """Write parameters to `path` in manifest order (insertion order)."""
    path = Path(path)
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", VERSION, len(params)))
        for name, value in params.items():
            encoded = name.encode("utf-8")
            arr = np.asarray(value, dtype=np.float64)
            fh.write(struct.pack("<H", len(encoded)))
            fh.write(encoded)
            fh.write(struct.pack("<B", arr.ndim))
            fh.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
        for value in params.values():
            arr = np.ascontiguousarray(value, dtype=np.float64)
            fh.write(arr.astype("<f8", copy=False).tobytes())


def load_params(path) -> dict[str, np.ndarray]:
    """Read a container written by save_params; validates magic and sizes."""
    path = Path(path)
    blob = path.read_bytes()
    if blob[:8] != MAGIC:
        raise ParseError(f"{path}: not a parameter checkpoint (bad magic)")
    offset = 8
    version, n_entries = struct.unpack_from("<II", blob, offset)
    offset += 8
    if version != VERSION:
        raise ParseError(f"{path}: unsupported checkpoint version {version}")
    manifest: list[tuple[str, tuple[int, ...]]] = []
    for _ in range(n_entries):
        (name_len,) = struct.unpack_from("<H", blob, offset)
        offset += 2
        name = blob[offset : offset + name_len].decode("utf-8")
        offset += name_len
        (ndim,) = struct.unpack_from("<B", blob, offset)
        offset += 1
        shape = struct.unpack_from(f"<{ndim}I", blob, offset)
        offset += 4 * ndim
        manifest.append((name, shape))
    params: dict[str, np.ndarray] = {}
    for name, shape in manifest:
        count = int(np.prod(shape)) if shape else 1
        end = offset + 8 * count
        if end > len(blob):
            raise ParseError(f"{path}: truncated payload for parameter '{name}'")
        flat = np.frombuffer(blob, dtype="<f8", count=count, offset=offset)
        params[name] = flat.astype(np.float64).reshape(shape)
        offset = end
    if offset != len(blob):
        raise ParseError(f"{path}: {len(blob) - offset} trailing bytes after payloads")
    return params
