"""Image quality metrics: PSNR and Gaussian-window SSIM."""

from __future__ import annotations

import math

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import ShapeMismatch
from .tensors import require_same_shape

SSIM_K1 = 0.01
SSIM_K2 = 0.03
SSIM_WINDOW = 11
SSIM_SIGMA = 1.5


def psnr(a: np.ndarray, b: np.ndarray, peak: float = 1.0) -> float:
    """10 log10(peak^2 / MSE); identical inputs report the +inf sentinel."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    require_same_shape(a, b, "psnr operands")
    if peak <= 0:
        raise ValueError("peak must be > 0")
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(peak * peak / mse)


def _gaussian_kernel(size: int, sigma: float) -> np.ndarray:
    half = (size - 1) / 2.0
    coords = np.arange(size) - half
    k1 = np.exp(-(coords**2) / (2.0 * sigma * sigma))
    kernel = np.outer(k1, k1)
    return kernel / kernel.sum()


def _ssim_plane(a: np.ndarray, b: np.ndarray, peak: float) -> float:
    size = min(SSIM_WINDOW, min(a.shape))
    if size % 2 == 0:
        size -= 1
    kernel = _gaussian_kernel(size, SSIM_SIGMA)

    def local_mean(img):
        win = sliding_window_view(img, (size, size))
        return np.einsum("xyij,ij->xy", win, kernel)

    mu_a = local_mean(a)
    mu_b = local_mean(b)
    mu_aa = local_mean(a * a)
    mu_bb = local_mean(b * b)
    mu_ab = local_mean(a * b)
    var_a = mu_aa - mu_a * mu_a
    var_b = mu_bb - mu_b * mu_b
    cov = mu_ab - mu_a * mu_b
    c1 = (SSIM_K1 * peak) ** 2
    c2 = (SSIM_K2 * peak) ** 2
    num = (2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)
    den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2)
    return float(np.mean(num / den))


def ssim(a: np.ndarray, b: np.ndarray, peak: float = 1.0) -> float:
    """Mean structural similarity over valid windows, channel-averaged."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    require_same_shape(a, b, "ssim operands")
    if peak <= 0:
        raise ValueError("peak must be > 0")
    if a.ndim == 2:
        return _ssim_plane(a, b, peak)
    if a.ndim != 3:
        raise ShapeMismatch("ssim expects a frame or a cube")
    return float(
        np.mean([_ssim_plane(a[:, :, c], b[:, :, c], peak) for c in range(a.shape[2])])
    )
