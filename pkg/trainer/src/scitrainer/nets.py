"""Forward and backward passes for the exportable layer vocabulary.

Activations are batched as (samples, nx, ny, channels). Convolutions are
stride-1 correlations with zero "same" padding, matching the toolkit's
inference pass; affine layers act on the per-sample flattened activation.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .weights import Affine, Conv, Network, Relu, SkipAdd


def _pad_same(x: np.ndarray, kh: int, kw: int) -> np.ndarray:
    return np.pad(x, ((0, 0), ((kh - 1) // 2, kh // 2), ((kw - 1) // 2, kw // 2), (0, 0)))


def _conv_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray) -> np.ndarray:
    kh, kw = w.shape[2:]
    win = sliding_window_view(_pad_same(x, kh, kw), (kh, kw), axis=(1, 2))
    # win: (s, nx, ny, ci, kh, kw)
    return np.einsum("sxycij,ocij->sxyo", win, w, optimize=True) + b


def _conv_backward(x: np.ndarray, w: np.ndarray, grad_out: np.ndarray):
    kh, kw = w.shape[2:]
    win = sliding_window_view(_pad_same(x, kh, kw), (kh, kw), axis=(1, 2))
    grad_w = np.einsum("sxycij,sxyo->ocij", win, grad_out, optimize=True)
    grad_b = grad_out.sum(axis=(0, 1, 2))
    # input gradient: correlate grad_out with spatially flipped, transposed kernels
    w_t = w[:, :, ::-1, ::-1].transpose(1, 0, 2, 3)
    gwin = sliding_window_view(_pad_same(grad_out, kh, kw), (kh, kw), axis=(1, 2))
    grad_x = np.einsum("sxyoij,coij->sxyc", gwin, w_t, optimize=True)
    return grad_x, grad_w, grad_b


def forward(net: Network, x: np.ndarray, keep: bool = False):
    """Run the net; with ``keep`` also return the per-layer input stack."""
    a = x
    saved = []
    for layer in net.layers:
        if keep:
            saved.append(a)
        if isinstance(layer, Conv):
            a = _conv_forward(a, layer.weights, layer.bias)
        elif isinstance(layer, Affine):
            flat = a.reshape(a.shape[0], -1)
            out = flat @ layer.weights.T + layer.bias
            ch = out.shape[1] // (a.shape[1] * a.shape[2])
            a = out.reshape(a.shape[0], a.shape[1], a.shape[2], ch)
        elif isinstance(layer, Relu):
            a = np.maximum(a, 0.0)
        elif isinstance(layer, SkipAdd):
            a = a + x
        else:
            raise TypeError(type(layer).__name__)
    return (a, saved) if keep else a


def forward_single(net: Network, cube: np.ndarray) -> np.ndarray:
    """Unbatched convenience wrapper for one (nx, ny, B) cube."""
    return forward(net, cube[None])[0]


def backward(net: Network, saved: list, grad_out: np.ndarray):
    """Gradients for every Conv/Affine layer given dLoss/dOutput.

    Returns (grads, grad_input) with ``grads[i]`` either None or a
    (grad_w, grad_b) pair aligned with ``net.layers``. Skip-add routes
    its gradient both backward and straight to the network input.
    """
    grads: list = [None] * len(net.layers)
    grad_input_direct = np.zeros_like(saved[0])
    g = grad_out
    for i in range(len(net.layers) - 1, -1, -1):
        layer = net.layers[i]
        a_in = saved[i]
        if isinstance(layer, Conv):
            g, gw, gb = _conv_backward(a_in, layer.weights, g)
            grads[i] = (gw, gb)
        elif isinstance(layer, Affine):
            flat_in = a_in.reshape(a_in.shape[0], -1)
            flat_g = g.reshape(g.shape[0], -1)
            grads[i] = (flat_g.T @ flat_in, flat_g.sum(axis=0))
            g = (flat_g @ layer.weights).reshape(a_in.shape)
        elif isinstance(layer, Relu):
            g = g * (a_in > 0.0)
        elif isinstance(layer, SkipAdd):
            grad_input_direct = grad_input_direct + g
            # pass-through branch continues backward unchanged
    return grads, g + grad_input_direct
