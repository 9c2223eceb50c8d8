"""Snapshot forward model and manifold projection, trainer-side.

Re-implemented here so the trainer has no library dependency on the
reconstruction toolkit; a parity test drives the toolkit's CLI on the
same data and requires agreement to 1e-5.
"""

from __future__ import annotations

import numpy as np


def measure(cube: np.ndarray, masks: np.ndarray) -> np.ndarray:
    """One coded exposure: sum_b mask_b * frame_b."""
    return np.einsum("...xyb,xyb->...xy", cube, masks)


def backproject(frame: np.ndarray, masks: np.ndarray) -> np.ndarray:
    """Adjoint of :func:`measure`."""
    return frame[..., None] * masks


def gram_diagonal(masks: np.ndarray) -> np.ndarray:
    r = np.einsum("xyb,xyb->xy", masks, masks)
    floor = 1e-12 * r.max() if r.max() > 0 else np.finfo(float).tiny
    return np.maximum(r, floor)


def project(v: np.ndarray, y: np.ndarray, masks: np.ndarray,
            r: np.ndarray | None = None) -> np.ndarray:
    """Euclidean step onto {x : measure(x) = y} (batched over leading dims)."""
    if r is None:
        r = gram_diagonal(masks)
    return v + backproject((y - measure(v, masks)) / r, masks)
