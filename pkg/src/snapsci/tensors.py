"""Dense tensor conventions and the ``.sct`` binary container.

Data cubes are real arrays of shape ``(n_x, n_y, B)``: video frames or
spectral channels stacked along the last axis. Frames are ``(n_x, n_y)``.
Vectorization column-stacks each channel slice and concatenates the
blocks, so block ``b`` of the vector equals the vectorized slice ``b``
alone. That fixed order is what the dense operator assembly and all
oracle tests rely on.

The ``.sct`` container stores a single tensor:

    magic   4 bytes  b"SCT1"
    rank    uint32, little-endian
    dims    rank x uint64, little-endian
    payload product(dims) float32 values, little-endian, C order

Disk payloads are 32-bit for compactness; arrays are returned as float64
so iterative solvers accumulate at full precision.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import BadMagic, ShapeMismatch, TruncatedPayload, UnsupportedRank

MAGIC = b"SCT1"
MAX_RANK = 4
FILE_EXTENSION = ".sct"


def vectorize(cube: np.ndarray) -> np.ndarray:
    """Flatten a cube to a vector, block b holding the column-stacked slice b."""
    cube = np.asarray(cube)
    if cube.ndim != 3:
        raise ShapeMismatch(f"expected a rank-3 cube, got shape {cube.shape}")
    return cube.transpose(2, 1, 0).reshape(-1)


def unvectorize(vec: np.ndarray, dims: tuple[int, int, int]) -> np.ndarray:
    """Inverse of :func:`vectorize` for the given (n_x, n_y, B) dims."""
    n_x, n_y, channels = dims
    vec = np.asarray(vec)
    if vec.size != n_x * n_y * channels:
        raise ShapeMismatch(f"vector of size {vec.size} does not fill dims {dims}")
    return vec.reshape(channels, n_y, n_x).transpose(2, 1, 0)


def vectorize_frame(frame: np.ndarray) -> np.ndarray:
    """Column-stack a 2D frame, matching the per-slice convention of cubes."""
    frame = np.asarray(frame)
    if frame.ndim != 2:
        raise ShapeMismatch(f"expected a rank-2 frame, got shape {frame.shape}")
    return frame.reshape(-1, order="F")


def unvectorize_frame(vec: np.ndarray, dims: tuple[int, int]) -> np.ndarray:
    n_x, n_y = dims
    vec = np.asarray(vec)
    if vec.size != n_x * n_y:
        raise ShapeMismatch(f"vector of size {vec.size} does not fill dims {dims}")
    return vec.reshape((n_x, n_y), order="F")


def write_tensor(path: str | Path, tensor: np.ndarray) -> None:
    """Write a rank 1..4 real tensor as a .sct file (float32 payload)."""
    arr = np.asarray(tensor, dtype=np.float64)
    if not 1 <= arr.ndim <= MAX_RANK:
        raise UnsupportedRank(f"rank {arr.ndim} not in 1..{MAX_RANK}")
    header = MAGIC + struct.pack("<I", arr.ndim)
    header += struct.pack(f"<{arr.ndim}Q", *arr.shape)
    payload = np.ascontiguousarray(arr, dtype="<f4").tobytes()
    Path(path).write_bytes(header + payload)


def read_tensor(path: str | Path) -> np.ndarray:
    """Read a .sct file back as a float64 array of the stored dims."""
    raw = Path(path).read_bytes()
    if len(raw) < 4 or raw[:4] != MAGIC:
        raise BadMagic(f"{path}: not a .sct tensor file")
    if len(raw) < 8:
        raise TruncatedPayload(f"{path}: header cut short")
    (rank,) = struct.unpack_from("<I", raw, 4)
    if not 1 <= rank <= MAX_RANK:
        raise UnsupportedRank(f"{path}: rank {rank} not in 1..{MAX_RANK}")
    dims_end = 8 + 8 * rank
    if len(raw) < dims_end:
        raise TruncatedPayload(f"{path}: header cut short")
    dims = struct.unpack_from(f"<{rank}Q", raw, 8)
    count = int(np.prod(dims, dtype=np.int64)) if rank else 0
    expected = dims_end + 4 * count
    if len(raw) != expected:
        raise TruncatedPayload(
            f"{path}: payload is {len(raw) - dims_end} bytes, expected {4 * count}"
        )
    flat = np.frombuffer(raw, dtype="<f4", count=count, offset=dims_end)
    return flat.reshape(dims).astype(np.float64)


def require_same_shape(a: np.ndarray, b: np.ndarray, what: str = "operands") -> None:
    if a.shape != b.shape:
        raise ShapeMismatch(f"{what}: {a.shape} vs {b.shape}")


def read_pgm(path: str | Path) -> np.ndarray:
    """Read a binary 8-bit PGM (P5) as a [0, 1] float frame. Import convenience."""
    raw = Path(path).read_bytes()
    if raw[:2] != b"P5":
        raise BadMagic(f"{path}: only binary (P5) PGM is supported")
    # header: magic, width, height, maxval as whitespace-separated tokens,
    # with '#' comment lines allowed
    tokens: list[bytes] = []
    pos = 2
    while len(tokens) < 3:
        while pos < len(raw) and raw[pos : pos + 1].isspace():
            pos += 1
        if pos < len(raw) and raw[pos : pos + 1] == b"#":
            while pos < len(raw) and raw[pos : pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(raw) and not raw[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise TruncatedPayload(f"{path}: PGM header cut short")
        tokens.append(raw[start:pos])
    pos += 1  # single whitespace after maxval
    width, height, maxval = (int(t) for t in tokens)
    if not 0 < maxval <= 255:
        raise UnsupportedRank(f"{path}: only 8-bit PGM supported (maxval {maxval})")
    count = width * height
    if len(raw) - pos < count:
        raise TruncatedPayload(f"{path}: PGM pixel data cut short")
    pixels = np.frombuffer(raw, dtype=np.uint8, count=count, offset=pos)
    return pixels.reshape(height, width).astype(np.float64) / float(maxval)
