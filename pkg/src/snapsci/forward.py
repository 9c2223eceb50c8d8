"""Hardware-encoder simulation for video and spectral snapshot capture.

Video capture multiplies each frame by its modulation mask and integrates
over frames: ``Y = sum_b C_b * X_b + Z``. Spectral capture modulates every
channel with one fixed 2D mask, shears channel b sideways by
``shift_step * b`` pixels (the disperser), then integrates. After mask
shifting, the spectral path reduces exactly to the video path, which the
tests verify to machine precision.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ShapeMismatch
from .tensors import require_same_shape


@dataclass(frozen=True)
class SpectralGeometry:
    """Disperser discretization: channel count and integer shift per channel.

    ``reference_channel`` is the channel with zero shift. Shifts are
    normalized to be non-negative, so a nonzero reference only moves the
    whole sheared cube by a constant column offset.
    """

    n_lambda: int
    shift_step: int = 2
    reference_channel: int = 0

    def __post_init__(self):
        if self.n_lambda < 1:
            raise ValueError("n_lambda must be >= 1")
        if not 0 <= self.reference_channel < self.n_lambda:
            raise ValueError("reference_channel out of range")

    def channel_shifts(self) -> np.ndarray:
        """Non-negative column offset per channel."""
        raw = self.shift_step * (np.arange(self.n_lambda) - self.reference_channel)
        return raw - raw.min()

    def sheared_width(self, n_y: int) -> int:
        return n_y + (self.n_lambda - 1) * abs(self.shift_step)


@dataclass(frozen=True)
class NoiseSpec:
    """Additive measurement noise: none, or zero-mean Gaussian with a seed."""

    kind: str = "none"
    sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("none", "gaussian"):
            raise ValueError(f"unknown noise kind {self.kind!r}")
        if self.sigma < 0:
            raise ValueError("sigma must be >= 0")

    def sample(self, shape: tuple[int, ...]) -> np.ndarray:
        if self.kind == "none" or self.sigma == 0.0:
            return np.zeros(shape)
        rng = np.random.default_rng(self.seed)
        return rng.normal(0.0, self.sigma, size=shape)


def video_forward(
    cube: np.ndarray, masks: np.ndarray, noise: NoiseSpec | None = None
) -> np.ndarray:
    """Mask every frame and integrate: ``Y = sum_b C_b * X_b + Z``."""
    cube = np.asarray(cube, dtype=np.float64)
    masks = np.asarray(masks, dtype=np.float64)
    if cube.ndim != 3 or masks.ndim != 3:
        raise ShapeMismatch("video_forward expects rank-3 cube and masks")
    require_same_shape(cube, masks, "cube vs masks")
    frame = np.einsum("xyb,xyb->xy", masks, cube)
    if noise is not None:
        frame = frame + noise.sample(frame.shape)
    return frame


def build_shifted_masks(mask2d: np.ndarray, geom: SpectralGeometry) -> np.ndarray:
    """Place the fixed 2D mask at each channel's column offset, zero elsewhere."""
    mask2d = np.asarray(mask2d, dtype=np.float64)
    if mask2d.ndim != 2:
        raise ShapeMismatch("mask2d must be rank 2")
    n_x, n_y = mask2d.shape
    width = geom.sheared_width(n_y)
    out = np.zeros((n_x, width, geom.n_lambda))
    for b, shift in enumerate(geom.channel_shifts()):
        out[:, shift : shift + n_y, b] = mask2d
    return out


def shear(cube: np.ndarray, geom: SpectralGeometry) -> np.ndarray:
    """Shift channel b right by its column offset, zero-filling the new width."""
    cube = np.asarray(cube, dtype=np.float64)
    if cube.ndim != 3:
        raise ShapeMismatch("shear expects a rank-3 cube")
    if cube.shape[2] != geom.n_lambda:
        raise ShapeMismatch(
            f"cube has {cube.shape[2]} channels, geometry says {geom.n_lambda}"
        )
    n_x, n_y, _ = cube.shape
    out = np.zeros((n_x, geom.sheared_width(n_y), geom.n_lambda))
    for b, shift in enumerate(geom.channel_shifts()):
        out[:, shift : shift + n_y, b] = cube[:, :, b]
    return out


def unshear(cube: np.ndarray, geom: SpectralGeometry) -> np.ndarray:
    """Undo :func:`shear`, recovering the original (narrower) support."""
    cube = np.asarray(cube, dtype=np.float64)
    if cube.ndim != 3 or cube.shape[2] != geom.n_lambda:
        raise ShapeMismatch("unshear expects a rank-3 cube matching the geometry")
    n_x, width, _ = cube.shape
    span = (geom.n_lambda - 1) * abs(geom.shift_step)
    if width < span + 1:
        raise ShapeMismatch(f"sheared width {width} too small for geometry span {span}")
    n_y = width - span
    out = np.empty((n_x, n_y, geom.n_lambda))
    for b, shift in enumerate(geom.channel_shifts()):
        out[:, :, b] = cube[:, shift : shift + n_y, b]
    return out


def spectral_forward(
    cube0: np.ndarray,
    mask2d: np.ndarray,
    geom: SpectralGeometry,
    noise: NoiseSpec | None = None,
) -> np.ndarray:
    """Modulate, shear, integrate: the full single-disperser spectral capture.

    ``cube0`` is the unshifted scene of dims (n_x, n_y, n_lambda); the
    measurement comes out with the sheared width n_y + (n_lambda-1)*step.
    """
    cube0 = np.asarray(cube0, dtype=np.float64)
    mask2d = np.asarray(mask2d, dtype=np.float64)
    if cube0.ndim != 3:
        raise ShapeMismatch("spectral_forward expects a rank-3 scene")
    if cube0.shape[2] != geom.n_lambda:
        raise ShapeMismatch(
            f"scene has {cube0.shape[2]} channels, geometry says {geom.n_lambda}"
        )
    if mask2d.shape != cube0.shape[:2]:
        raise ShapeMismatch(f"mask {mask2d.shape} vs scene plane {cube0.shape[:2]}")
    modulated = cube0 * mask2d[:, :, None]
    frame = shear(modulated, geom).sum(axis=2)
    if noise is not None:
        frame = frame + noise.sample(frame.shape)
    return frame
