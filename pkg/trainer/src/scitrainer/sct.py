"""The .sct tensor container, self-contained on the trainer side.

Byte layout is a shared contract with the reconstruction toolkit: magic
"SCT1", uint32 rank, rank x uint64 dims, float32 little-endian C-order
payload. A golden-file test keeps the two writers byte-identical.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

MAGIC = b"SCT1"
MAX_RANK = 4


def write_tensor(path: str | Path, tensor: np.ndarray) -> None:
    arr = np.asarray(tensor, dtype=np.float64)
    if not 1 <= arr.ndim <= MAX_RANK:
        raise ValueError(f"rank {arr.ndim} not in 1..{MAX_RANK}")
    header = MAGIC + struct.pack("<I", arr.ndim) + struct.pack(f"<{arr.ndim}Q", *arr.shape)
    Path(path).write_bytes(header + np.ascontiguousarray(arr, dtype="<f4").tobytes())


def read_tensor(path: str | Path) -> np.ndarray:
    raw = Path(path).read_bytes()
    if raw[:4] != MAGIC:
        raise ValueError(f"{path}: bad magic")
    (rank,) = struct.unpack_from("<I", raw, 4)
    if not 1 <= rank <= MAX_RANK:
        raise ValueError(f"{path}: unsupported rank {rank}")
    dims = struct.unpack_from(f"<{rank}Q", raw, 8)
    offset = 8 + 8 * rank
    count = int(np.prod(dims))
    if len(raw) != offset + 4 * count:
        raise ValueError(f"{path}: payload length mismatch")
    return np.frombuffer(raw, dtype="<f4", count=count, offset=offset).reshape(dims).astype(np.float64)
