"""Binary checkpoint container: magic, version, config JSON, named tensors.

Layout (all integers little-endian):

    bytes 0-3   magic "ITVM"
    uint32      format version (currently 1)
    uint64      length of the embedded config JSON (UTF-8 bytes)
    ...         config JSON
    uint64      tensor count
    per tensor: uint64 name length, UTF-8 name, uint64 rank,
                rank * uint64 dims, row-major float64 data

Saving writes to a temp file in the target directory and renames it into
place, so an interrupted run never leaves a truncated checkpoint behind.
"""

from __future__ import annotations

import json
import os
import struct
from pathlib import Path

import numpy as np

from .errors import FormatError

MAGIC = b"ITVM"
VERSION = 1


def save_checkpoint(path, config: dict, tensors: dict[str, np.ndarray]) -> None:
    path = Path(path)
    config_bytes = json.dumps(config, sort_keys=True).encode("utf-8")
    parts = [MAGIC, struct.pack("<I", VERSION)]
    parts.append(struct.pack("<Q", len(config_bytes)))
    parts.append(config_bytes)
    parts.append(struct.pack("<Q", len(tensors)))
    for name, arr in tensors.items():
        arr = np.ascontiguousarray(arr, dtype=np.float64)
        name_bytes = name.encode("utf-8")
        parts.append(struct.pack("<Q", len(name_bytes)))
        parts.append(name_bytes)
        parts.append(struct.pack("<Q", arr.ndim))
        parts.append(struct.pack(f"<{arr.ndim}Q", *arr.shape))
        parts.append(arr.astype("<f8").tobytes())
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(b"".join(parts))
    os.replace(tmp, path)


class _Reader:
    def __init__(self, data: bytes, path):
        self.data = data
        self.pos = 0
        self.path = path

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise FormatError(f"{self.path}: truncated checkpoint")
        out = self.data[self.pos : self.pos + n]
        self.pos += n
        return out

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]

    def u64(self) -> int:
        return struct.unpack("<Q", self.take(8))[0]


def load_checkpoint(path) -> tuple[dict, dict[str, np.ndarray]]:
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as e:
        raise FormatError(f"{path}: cannot read checkpoint ({e})") from e
    r = _Reader(raw, path)
    if r.take(4) != MAGIC:
        raise FormatError(f"{path}: not a checkpoint file (bad magic)")
    version = r.u32()
    if version != VERSION:
        raise FormatError(
            f"{path}: unsupported checkpoint version {version} (expected {VERSION})"
        )
    config = json.loads(r.take(r.u64()).decode("utf-8"))
    n_tensors = r.u64()
    tensors: dict[str, np.ndarray] = {}
    for _ in range(n_tensors):
        name = r.take(r.u64()).decode("utf-8")
        rank = r.u64()
        dims = struct.unpack(f"<{rank}Q", r.take(8 * rank))
        count = 1
        for d in dims:
            count *= d
        arr = np.frombuffer(r.take(8 * count), dtype="<f8").reshape(dims)
        if name in tensors:
            raise FormatError(f"{path}: duplicate tensor name '{name}'")
        tensors[name] = arr.copy()
    if r.pos != len(raw):
        raise FormatError(f"{path}: trailing bytes after tensor table")
    return config, tensors
