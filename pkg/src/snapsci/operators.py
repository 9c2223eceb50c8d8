"""The structured sensing operator behind snapshot capture.

With n = n_x * n_y pixels and B channels, the sensing matrix is a row of
B diagonal blocks, one per mask. The Gram matrix R = H H^T is therefore
diagonal with entries sum_b C_b(i)^2, which is what makes the Euclidean
projection onto {x : Hx = y} and the ADMM x-update O(nB): everything here
works pixelwise on mask stacks and never materializes a matrix, except
for :meth:`SciOperator.to_dense`, the small-instance test oracle.
"""

from __future__ import annotations

import numpy as np

from .errors import NonPositiveGamma, ShapeMismatch, TooLarge
from .tensors import require_same_shape, vectorize_frame

DENSE_GUARD = 1_000_000  # refuse dense assembly beyond n * nB entries


class SciOperator:
    """Matrix-free H = [D_1, ..., D_B] defined by a mask stack.

    Immutable after construction; every method is pure. ``r_floor`` guards
    the inverse of the diagonal Gram matrix at pixels no mask ever
    exposes; by default it is 1e-12 times the largest diagonal entry.
    """

    def __init__(self, masks: np.ndarray, r_floor: float | None = None):
        masks = np.array(masks, dtype=np.float64)
        if masks.ndim != 3:
            raise ShapeMismatch(f"mask stack must be rank 3, got {masks.shape}")
        masks.setflags(write=False)
        self.masks = masks
        r_raw = np.einsum("xyb,xyb->xy", masks, masks)
        if r_floor is None:
            top = float(r_raw.max())
            r_floor = 1e-12 * top if top > 0 else np.finfo(np.float64).tiny
        if r_floor <= 0:
            raise ValueError("r_floor must be positive")
        self.r_floor = float(r_floor)
        self._r_raw = r_raw
        self._r = np.maximum(r_raw, self.r_floor)
        self._r.setflags(write=False)

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.masks.shape

    @property
    def n_pixels(self) -> int:
        n_x, n_y, _ = self.masks.shape
        return n_x * n_y

    @property
    def n_channels(self) -> int:
        return self.masks.shape[2]

    def forward(self, cube: np.ndarray) -> np.ndarray:
        """Apply H: mask each channel and integrate into one frame."""
        cube = np.asarray(cube, dtype=np.float64)
        require_same_shape(cube, self.masks, "cube vs masks")
        return np.einsum("xyb,xyb->xy", self.masks, cube)

    def adjoint(self, frame: np.ndarray) -> np.ndarray:
        """Apply H^T: replicate the frame into each channel through its mask."""
        frame = np.asarray(frame, dtype=np.float64)
        if frame.shape != self.masks.shape[:2]:
            raise ShapeMismatch(f"frame {frame.shape} vs plane {self.masks.shape[:2]}")
        return self.masks * frame[:, :, None]

    def r_diagonal(self) -> np.ndarray:
        """Diagonal of H H^T as a frame: sum_b C_b(i)^2, floored at r_floor."""
        return self._r.copy()

    def project_to_manifold(
        self, v: np.ndarray, y: np.ndarray, scale: float = 1.0
    ) -> np.ndarray:
        """Move v onto {x : Hx = y}: x = v + scale * H^T R^-1 (y - Hv).

        scale=1 is the Euclidean projection; scale=B is the variant used
        with unit-variance Gaussian masks, where it compensates for the
        operator's average gain.
        """
        v = np.asarray(v, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        residual = y - self.forward(v)
        return v + scale * self.adjoint(residual / self._r)

    def admm_x_update(
        self, y: np.ndarray, v: np.ndarray, u: np.ndarray, gamma: float
    ) -> np.ndarray:
        """Solve (H^T H + gamma I) x = H^T y + gamma (v + u) in closed form.

        Uses (H^T H + g I)^-1 = (I - H^T (g I + H H^T)^-1 H) / g with the
        diagonal (un-floored) Gram matrix, so the solve is pixelwise.
        """
        if gamma <= 0:
            raise NonPositiveGamma(f"gamma must be > 0, got {gamma}")
        y = np.asarray(y, dtype=np.float64)
        v = np.asarray(v, dtype=np.float64)
        u = np.asarray(u, dtype=np.float64)
        require_same_shape(v, u, "v vs u")
        rhs = self.adjoint(y) + gamma * (v + u)
        correction = self.adjoint(self.forward(rhs) / (gamma + self._r_raw))
        return (rhs - correction) / gamma

    def to_dense(self) -> np.ndarray:
        """Explicit (n x nB) matrix in vectorize() column order. Test oracle."""
        n = self.n_pixels
        if n * n * self.n_channels > DENSE_GUARD:
            raise TooLarge(f"dense H would hold {n * n * self.n_channels} entries")
        blocks = [
            np.diag(vectorize_frame(self.masks[:, :, b]))
            for b in range(self.n_channels)
        ]
        return np.hstack(blocks)

    def operator_norm(self, iters: int = 200, tol: float = 1e-14, seed: int = 0) -> float:
        """Power-iteration estimate of the top eigenvalue of H^T R^-1 H."""
        rng = np.random.default_rng(seed)
        z = rng.standard_normal(self.masks.shape)
        z /= np.linalg.norm(z)
        estimate = 0.0
        for _ in range(iters):
            w = self.adjoint(self.forward(z) / self._r)
            new = float(np.einsum("xyb,xyb->", z, w))  # Rayleigh quotient
            norm = np.linalg.norm(w)
            if norm == 0.0:
                return 0.0
            z = w / norm
            if abs(new - estimate) <= tol * max(1.0, abs(new)):
                estimate = new
                break
            estimate = new
        return estimate
