"""Synthetic scenes and mask generators for benchmarks and tests."""

from __future__ import annotations

import numpy as np

from .errors import CropOutOfBounds


def moving_square_video(
    n_x: int = 32,
    n_y: int = 32,
    frames: int = 8,
    square: int = 10,
    seed: int = 0,
    background: float = 0.1,
    foreground: float = 0.9,
) -> np.ndarray:
    """Piecewise-constant video: one bright square drifting across frames.

    Position and velocity are drawn per seed; motion reflects off the
    borders so the square stays fully inside every frame.
    """
    if square >= min(n_x, n_y):
        raise ValueError("square must fit inside the frame")
    rng = np.random.default_rng(seed)
    pos = np.array(
        [rng.integers(0, n_x - square), rng.integers(0, n_y - square)], dtype=float
    )
    vel = rng.integers(1, 4, size=2).astype(float) * rng.choice([-1.0, 1.0], size=2)
    cube = np.full((n_x, n_y, frames), background)
    for b in range(frames):
        r, c = int(round(pos[0])), int(round(pos[1]))
        cube[r : r + square, c : c + square, b] = foreground
        for axis, limit in ((0, n_x - square), (1, n_y - square)):
            pos[axis] += vel[axis]
            if pos[axis] < 0 or pos[axis] > limit:
                vel[axis] = -vel[axis]
                pos[axis] = np.clip(pos[axis], 0, limit)
    return cube


def bernoulli_masks(
    n_x: int, n_y: int, frames: int, seed: int = 0, p: float = 0.5
) -> np.ndarray:
    """Binary masks, each entry on with probability p."""
    if not 0 <= p <= 1:
        raise ValueError("p must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    return (rng.random((n_x, n_y, frames)) < p).astype(np.float64)


def gaussian_masks(n_x: int, n_y: int, frames: int, seed: int = 0) -> np.ndarray:
    """Standard normal masks (the theory-lab ensemble)."""
    rng = np.random.default_rng(seed)
    return rng.standard_normal((n_x, n_y, frames))


def crop_mask(
    source: np.ndarray, offset: tuple[int, int], size: tuple[int, int]
) -> np.ndarray:
    """Cut a window from a mother mask; bounds are validated."""
    source = np.asarray(source, dtype=np.float64)
    r, c = offset
    h, w = size
    if r < 0 or c < 0 or h < 1 or w < 1:
        raise CropOutOfBounds(f"bad crop offset {offset} / size {size}")
    if r + h > source.shape[0] or c + w > source.shape[1]:
        raise CropOutOfBounds(
            f"crop {offset}+{size} exceeds source {source.shape[:2]}"
        )
    return source[r : r + h, c : c + w].copy()
