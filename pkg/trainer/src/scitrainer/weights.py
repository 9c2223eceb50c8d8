"""Layer definitions and the .scw weight container (shared contract).

Layout, little-endian throughout: magic "SCW1", uint32 layer count, then
per layer a uint16-length ascii name, a 4-byte kind tag, kind-specific
uint32 shape fields and float32 payloads, and a trailing uint8 stage
index. Tags: CONV (out, in, kh, kw, stride + weights + bias), AFFN
(out, in + weights + bias), RELU, SKIP.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

MAGIC = b"SCW1"


@dataclass
class Conv:
    name: str
    weights: np.ndarray  # (out_ch, in_ch, kh, kw)
    bias: np.ndarray
    stride: int = 1


@dataclass
class Affine:
    name: str
    weights: np.ndarray  # (out_dim, in_dim)
    bias: np.ndarray


@dataclass
class Relu:
    name: str


@dataclass
class SkipAdd:
    name: str


@dataclass
class Network:
    layers: list = field(default_factory=list)
    stage_index: int = 0


def _floats(arr: np.ndarray) -> bytes:
    return np.ascontiguousarray(arr, dtype="<f4").tobytes()


def save_network(path: str | Path, net: Network) -> None:
    chunks = [MAGIC, struct.pack("<I", len(net.layers))]
    for layer in net.layers:
        name = layer.name.encode("ascii")
        chunks.append(struct.pack("<H", len(name)) + name)
        if isinstance(layer, Conv):
            out_ch, in_ch, kh, kw = layer.weights.shape
            chunks += [b"CONV", struct.pack("<5I", out_ch, in_ch, kh, kw, layer.stride),
                       _floats(layer.weights), _floats(layer.bias)]
        elif isinstance(layer, Affine):
            out_dim, in_dim = layer.weights.shape
            chunks += [b"AFFN", struct.pack("<2I", out_dim, in_dim),
                       _floats(layer.weights), _floats(layer.bias)]
        elif isinstance(layer, Relu):
            chunks.append(b"RELU")
        elif isinstance(layer, SkipAdd):
            chunks.append(b"SKIP")
        else:
            raise TypeError(f"cannot serialize {type(layer).__name__}")
    chunks.append(struct.pack("<B", net.stage_index))
    Path(path).write_bytes(b"".join(chunks))


def load_network(path: str | Path) -> Network:
    raw = Path(path).read_bytes()
    if raw[:4] != MAGIC:
        raise ValueError(f"{path}: bad magic")
    pos = 4
    (count,) = struct.unpack_from("<I", raw, pos)
    pos += 4
    layers = []
    for _ in range(count):
        (name_len,) = struct.unpack_from("<H", raw, pos)
        pos += 2
        name = raw[pos : pos + name_len].decode("ascii")
        pos += name_len
        kind = raw[pos : pos + 4]
        pos += 4
        if kind == b"CONV":
            out_ch, in_ch, kh, kw, stride = struct.unpack_from("<5I", raw, pos)
            pos += 20
            n = out_ch * in_ch * kh * kw
            w = np.frombuffer(raw, "<f4", n, pos).reshape(out_ch, in_ch, kh, kw).astype(np.float64)
            pos += 4 * n
            b = np.frombuffer(raw, "<f4", out_ch, pos).astype(np.float64)
            pos += 4 * out_ch
            layers.append(Conv(name, w, b, stride))
        elif kind == b"AFFN":
            out_dim, in_dim = struct.unpack_from("<2I", raw, pos)
            pos += 8
            w = np.frombuffer(raw, "<f4", out_dim * in_dim, pos).reshape(out_dim, in_dim).astype(np.float64)
            pos += 4 * out_dim * in_dim
            b = np.frombuffer(raw, "<f4", out_dim, pos).astype(np.float64)
            pos += 4 * out_dim
            layers.append(Affine(name, w, b))
        elif kind == b"RELU":
            layers.append(Relu(name))
        elif kind == b"SKIP":
            layers.append(SkipAdd(name))
        else:
            raise ValueError(f"{path}: unknown layer tag {kind!r}")
    (stage_index,) = struct.unpack_from("<B", raw, pos)
    return Network(layers, stage_index)
