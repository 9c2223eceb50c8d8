"""Small feed-forward denoising networks and the ``.scw`` weight container.

Layer vocabulary: 2D convolution (zero padding "same", correlation
convention), affine on the flattened activation, ReLU, and skip-add,
which adds the network's original input back in. Nets must preserve the
input shape end to end; :func:`run_network` validates the chain as it
goes and the forward pass is deterministic.

WeightFile layout (everything little-endian):

    magic        4 bytes  b"SCW1"
    layer_count  uint32
    per layer:
        name_len uint16, name bytes (ascii)
        kind     4 bytes: b"CONV" | b"AFFN" | b"RELU" | b"SKIP"
        CONV:    uint32 out_ch, in_ch, kh, kw, stride,
                 float32 weights[out*in*kh*kw] (C order), float32 bias[out]
        AFFN:    uint32 out_dim, in_dim,
                 float32 weights[out*in] (C order), float32 bias[out]
        RELU/SKIP: no payload
    stage_index  uint8 (trailing byte)
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import (
    BadMagic,
    TruncatedPayload,
    UnknownLayerKind,
    WeightShapeMismatch,
)

WEIGHT_MAGIC = b"SCW1"
WEIGHT_EXTENSION = ".scw"


@dataclass
class ConvLayer:
    name: str
    weights: np.ndarray  # (out_ch, in_ch, kh, kw)
    bias: np.ndarray  # (out_ch,)
    stride: int = 1

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.bias = np.asarray(self.bias, dtype=np.float64)
        if self.weights.ndim != 4:
            raise WeightShapeMismatch(f"conv weights must be rank 4, got {self.weights.shape}")
        if self.bias.shape != (self.weights.shape[0],):
            raise WeightShapeMismatch("conv bias length must equal out channels")
        if self.stride < 1:
            raise WeightShapeMismatch("conv stride must be >= 1")


@dataclass
class AffineLayer:
    name: str
    weights: np.ndarray  # (out_dim, in_dim)
    bias: np.ndarray  # (out_dim,)

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.bias = np.asarray(self.bias, dtype=np.float64)
        if self.weights.ndim != 2:
            raise WeightShapeMismatch(f"affine weights must be rank 2, got {self.weights.shape}")
        if self.bias.shape != (self.weights.shape[0],):
            raise WeightShapeMismatch("affine bias length must equal out dim")


@dataclass
class ReluLayer:
    name: str


@dataclass
class SkipAddLayer:
    name: str


Layer = ConvLayer | AffineLayer | ReluLayer | SkipAddLayer


@dataclass
class NetworkWeights:
    layers: list = field(default_factory=list)
    stage_index: int = 0


def _conv2d_same(x: np.ndarray, w: np.ndarray, b: np.ndarray, stride: int) -> np.ndarray:
    # x: (nx, ny, in_ch); w: (out_ch, in_ch, kh, kw); correlation, zero pad
    kh, kw = w.shape[2], w.shape[3]
    pad = ((kh - 1) // 2, kh // 2), ((kw - 1) // 2, kw // 2), (0, 0)
    xp = np.pad(x, pad)
    win = sliding_window_view(xp, (kh, kw), axis=(0, 1))  # (nx, ny, in_ch, kh, kw)
    out = np.einsum("xycij,ocij->xyo", win, w, optimize=True) + b
    if stride > 1:
        out = out[::stride, ::stride]
    return out


def run_network(net: NetworkWeights, cube: np.ndarray) -> np.ndarray:
    """Deterministic forward pass; output shape must match the input."""
    x0 = np.asarray(cube, dtype=np.float64)
    if x0.ndim == 2:
        x = x0[:, :, None]
    elif x0.ndim == 3:
        x = x0
    else:
        raise WeightShapeMismatch("network input must be a frame or a cube")
    original = x
    plane = x.shape[0] * x.shape[1]
    a = x
    for layer in net.layers:
        if isinstance(layer, ConvLayer):
            if a.ndim != 3:
                raise WeightShapeMismatch(
                    f"layer {layer.name!r}: conv needs a spatial activation"
                )
            if a.shape[2] != layer.weights.shape[1]:
                raise WeightShapeMismatch(
                    f"layer {layer.name!r}: activation has {a.shape[2]} channels, "
                    f"conv expects {layer.weights.shape[1]}"
                )
            a = _conv2d_same(a, layer.weights, layer.bias, layer.stride)
        elif isinstance(layer, AffineLayer):
            flat = a.reshape(-1)
            if flat.size != layer.weights.shape[1]:
                raise WeightShapeMismatch(
                    f"layer {layer.name!r}: activation size {flat.size}, "
                    f"affine expects {layer.weights.shape[1]}"
                )
            out = layer.weights @ flat + layer.bias
            # bottleneck widths stay flat; plane-tiling widths go spatial
            if out.size % plane == 0:
                a = out.reshape(x.shape[0], x.shape[1], out.size // plane)
            else:
                a = out
        elif isinstance(layer, ReluLayer):
            a = np.maximum(a, 0.0)
        elif isinstance(layer, SkipAddLayer):
            if a.shape != original.shape:
                raise WeightShapeMismatch(
                    f"layer {layer.name!r}: skip-add needs activation shape "
                    f"{original.shape}, got {a.shape}"
                )
            a = a + original
        else:
            raise UnknownLayerKind(f"unsupported layer object {type(layer).__name__}")
    if a.shape != original.shape:
        raise WeightShapeMismatch(
            f"network output {a.shape} does not match input {original.shape}"
        )
    return a if x0.ndim == 3 else a[:, :, 0]


# ---------------------------------------------------------------------------
# serialization

def _pack_floats(arr: np.ndarray) -> bytes:
    return np.ascontiguousarray(arr, dtype="<f4").tobytes()


def save_weights(path: str | Path, net: NetworkWeights) -> None:
    chunks = [WEIGHT_MAGIC, struct.pack("<I", len(net.layers))]
    for layer in net.layers:
        name = layer.name.encode("ascii")
        chunks.append(struct.pack("<H", len(name)) + name)
        if isinstance(layer, ConvLayer):
            out_ch, in_ch, kh, kw = layer.weights.shape
            chunks.append(b"CONV")
            chunks.append(struct.pack("<5I", out_ch, in_ch, kh, kw, layer.stride))
            chunks.append(_pack_floats(layer.weights))
            chunks.append(_pack_floats(layer.bias))
        elif isinstance(layer, AffineLayer):
            out_dim, in_dim = layer.weights.shape
            chunks.append(b"AFFN")
            chunks.append(struct.pack("<2I", out_dim, in_dim))
            chunks.append(_pack_floats(layer.weights))
            chunks.append(_pack_floats(layer.bias))
        elif isinstance(layer, ReluLayer):
            chunks.append(b"RELU")
        elif isinstance(layer, SkipAddLayer):
            chunks.append(b"SKIP")
        else:
            raise UnknownLayerKind(f"cannot serialize {type(layer).__name__}")
    chunks.append(struct.pack("<B", net.stage_index))
    Path(path).write_bytes(b"".join(chunks))


class _Reader:
    def __init__(self, raw: bytes, path):
        self.raw = raw
        self.pos = 0
        self.path = path

    def take(self, count: int) -> bytes:
        if self.pos + count > len(self.raw):
            raise TruncatedPayload(f"{self.path}: weight file cut short")
        out = self.raw[self.pos : self.pos + count]
        self.pos += count
        return out

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))

    def floats(self, count: int) -> np.ndarray:
        return np.frombuffer(self.take(4 * count), dtype="<f4").astype(np.float64)


def load_weights(path: str | Path) -> NetworkWeights:
    raw = Path(path).read_bytes()
    if len(raw) < 4 or raw[:4] != WEIGHT_MAGIC:
        raise BadMagic(f"{path}: not a weight file")
    r = _Reader(raw, path)
    r.take(4)
    (count,) = r.unpack("<I")
    layers = []
    for _ in range(count):
        (name_len,) = r.unpack("<H")
        name = r.take(name_len).decode("ascii")
        kind = r.take(4)
        if kind == b"CONV":
            out_ch, in_ch, kh, kw, stride = r.unpack("<5I")
            w = r.floats(out_ch * in_ch * kh * kw).reshape(out_ch, in_ch, kh, kw)
            b = r.floats(out_ch)
            layers.append(ConvLayer(name, w, b, stride))
        elif kind == b"AFFN":
            out_dim, in_dim = r.unpack("<2I")
            w = r.floats(out_dim * in_dim).reshape(out_dim, in_dim)
            b = r.floats(out_dim)
            layers.append(AffineLayer(name, w, b))
        elif kind == b"RELU":
            layers.append(ReluLayer(name))
        elif kind == b"SKIP":
            layers.append(SkipAddLayer(name))
        else:
            raise UnknownLayerKind(f"{path}: unknown layer tag {kind!r}")
    (stage_index,) = r.unpack("<B")
    if r.pos != len(raw):
        raise TruncatedPayload(f"{path}: {len(raw) - r.pos} trailing bytes")
    return NetworkWeights(layers, stage_index)
