"""Versioned binary checkpoints for named parameter arrays.

Layout: magic bytes ``SQTB1``, then one record per parameter in sorted name
order. Each record is a uint32 name length, the UTF-8 name, a uint32 rank,
the dims as uint32, and the raw float32 data. All integers and floats are
little-endian.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

MAGIC = b"SQTB1"


class CheckpointError(ValueError):
    pass


def save_checkpoint(path: str | Path, params: dict[str, np.ndarray]) -> None:
    chunks = [MAGIC]
    for name in sorted(params):
        data = np.asarray(params[name], dtype="<f4")
        if not data.flags.c_contiguous:
            data = np.ascontiguousarray(data)
        encoded = name.encode("utf-8")
        chunks.append(struct.pack("<I", len(encoded)))
        chunks.append(encoded)
        chunks.append(struct.pack("<I", data.ndim))
        chunks.append(struct.pack(f"<{data.ndim}I", *data.shape))
        chunks.append(data.tobytes())
    Path(path).write_bytes(b"".join(chunks))


def load_checkpoint(path: str | Path) -> dict[str, np.ndarray]:
    blob = Path(path).read_bytes()
    if not blob.startswith(MAGIC):
        raise CheckpointError(f"{path}: bad magic, not a checkpoint file")
    offset = len(MAGIC)
    params: dict[str, np.ndarray] = {}

    def take(n: int) -> bytes:
        nonlocal offset
        if offset + n > len(blob):
            raise CheckpointError(f"{path}: truncated at byte {offset}")
        piece = blob[offset : offset + n]
        offset += n
        return piece

    while offset < len(blob):
        (name_len,) = struct.unpack("<I", take(4))
        name = take(name_len).decode("utf-8")
        (rank,) = struct.unpack("<I", take(4))
        shape = struct.unpack(f"<{rank}I", take(4 * rank)) if rank else ()
        count = int(np.prod(shape, dtype=np.int64)) if shape else 1
        data = np.frombuffer(take(4 * count), dtype="<f4").reshape(shape)
        if name in params:
            raise CheckpointError(f"{path}: duplicate parameter {name!r}")
        params[name] = data.astype(np.float32)
    return params
