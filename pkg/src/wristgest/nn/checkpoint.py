"""Flat binary checkpoint format for named parameter tensors.

Layout: magic ``b"NNCP"``, uint32 version, uint32 parameter count, then per
parameter: uint32 name length, utf-8 name, uint32 rank, uint32 dims,
little-endian float32 payload.
"""

from __future__ import annotations

import struct
from pathlib import Path
from typing import Mapping

import numpy as np

from .tensor import Tensor

MAGIC = b"NNCP"
VERSION = 1


def save_checkpoint(params: Mapping[str, Tensor], path) -> None:
    path = Path(path)
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", VERSION, len(params)))
        for name, tensor in params.items():
            encoded = name.encode("utf-8")
            arr = np.ascontiguousarray(tensor.data, dtype="<f4")
            fh.write(struct.pack("<I", len(encoded)))
            fh.write(encoded)
            fh.write(struct.pack("<I", arr.ndim))
            fh.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
            fh.write(arr.tobytes())


def load_checkpoint(path) -> dict[str, np.ndarray]:
    path = Path(path)
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != MAGIC:
            raise ValueError(f"{path}: not a checkpoint file (bad magic {magic!r})")
        version, count = struct.unpack("<II", fh.read(8))
        if version != VERSION:
            raise ValueError(f"{path}: unsupported checkpoint version {version}")
        out: dict[str, np.ndarray] = {}
        for _ in range(count):
            (name_len,) = struct.unpack("<I", fh.read(4))
            name = fh.read(name_len).decode("utf-8")
            (rank,) = struct.unpack("<I", fh.read(4))
            shape = struct.unpack(f"<{rank}I", fh.read(4 * rank)) if rank else ()
            n = int(np.prod(shape)) if shape else 1
            payload = fh.read(4 * n)
            if len(payload) != 4 * n:
                raise ValueError(f"{path}: truncated payload for parameter {name!r}")
            out[name] = np.frombuffer(payload, dtype="<f4").reshape(shape).copy()
    return out
