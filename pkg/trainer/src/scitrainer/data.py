"""Synthetic scenes and greedy stage-wise training pairs."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .nets import forward
from .ops import backproject, gram_diagonal, measure, project
from .weights import Network


def moving_square_video(n_x=32, n_y=32, frames=8, square=10, seed=0,
                        background=0.1, foreground=0.9) -> np.ndarray:
    """Bright square drifting with reflection, one cube per seed."""
    rng = np.random.default_rng(seed)
    pos = np.array([rng.integers(0, n_x - square), rng.integers(0, n_y - square)],
                   dtype=float)
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


def bernoulli_masks(n_x, n_y, frames, seed=0, p=0.5) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return (rng.random((n_x, n_y, frames)) < p).astype(np.float64)


@dataclass
class Dataset:
    """Aligned (noisy input, clean target) cube stacks for one stage."""

    inputs: np.ndarray  # (count, nx, ny, B)
    targets: np.ndarray

    def __len__(self) -> int:
        return len(self.inputs)

    @property
    def empty(self) -> bool:
        return len(self.inputs) == 0


def scene_stack(count: int, seed: int, shape=(32, 32, 8)) -> np.ndarray:
    n_x, n_y, frames = shape
    if count == 0:
        return np.zeros((0, n_x, n_y, frames))
    return np.stack(
        [moving_square_video(n_x, n_y, frames, seed=seed + i) for i in range(count)]
    )


def gaussian_pairs(count: int, sigma: float, seed: int, shape=(32, 32, 1)) -> Dataset:
    """Clean scenes plus additive Gaussian noise at a fixed level."""
    clean = scene_stack(count, seed, shape)
    rng = np.random.default_rng(seed + 10_000)
    noisy = clean + rng.normal(0.0, sigma, clean.shape)
    return Dataset(noisy, clean)


def stage_intermediates(
    truths: np.ndarray, masks: np.ndarray, trained: list[Network]
) -> np.ndarray:
    """Inputs for stage len(trained)+1: run the loop through the stages so far.

    Each scene is measured, initialized at the backprojection, and pushed
    through projection plus the already-trained denoisers; the final
    projection output is what the next stage will see.
    """
    r = gram_diagonal(masks)
    y = measure(truths, masks)
    v = backproject(y, masks)
    x = project(v, y, masks, r)
    for net in trained:
        v = forward(net, x)
        x = project(v, y, masks, r)
    return x


def generate_training_pairs(
    count: int,
    masks: np.ndarray,
    trained: list[Network] | None = None,
    seed: int = 0,
    shape=(32, 32, 8),
) -> Dataset:
    """Greedy stage-wise pairs: loop intermediates in, clean cubes out."""
    truths = scene_stack(count, seed, shape)
    if count == 0:
        return Dataset(truths, truths)
    inputs = stage_intermediates(truths, masks, trained or [])
    return Dataset(inputs, truths)
