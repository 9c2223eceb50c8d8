"""Per-stage denoisers: the signal-domain half of every solver stage.

A denoiser maps a cube to a same-shape cube. Concrete kinds:

* identity, for debugging and fixed-point tests
* total variation via a dual projected-gradient scheme, applied per channel
* an oracle subspace projector (Q Q^T on the vectorized cube)
* a loaded feed-forward network (see :mod:`snapsci.networks`)
* a generative projector that descends ||x - g(f)|| over the latent f
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ShapeMismatch
from .tensors import unvectorize, vectorize


class Denoiser:
    """Base stage: subclasses implement :meth:`denoise` preserving shape."""

    kind = "base"

    def denoise(self, cube: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, cube: np.ndarray) -> np.ndarray:
        return self.denoise(cube)


class IdentityDenoiser(Denoiser):
    kind = "identity"

    def denoise(self, cube: np.ndarray) -> np.ndarray:
        return cube


class TVDenoiser(Denoiser):
    """Anisotropic total-variation denoising, channel by channel."""

    kind = "tv"

    def __init__(self, lambda_tv: float, iters: int = 30):
        if lambda_tv < 0:
            raise ValueError("lambda_tv must be >= 0")
        if iters < 1:
            raise ValueError("iters must be >= 1")
        self.lambda_tv = float(lambda_tv)
        self.iters = int(iters)

    def denoise(self, cube: np.ndarray) -> np.ndarray:
        return tv_denoise(cube, self.lambda_tv, self.iters)


class SubspaceDenoiser(Denoiser):
    """Oracle projector onto the column span of an orthonormal basis Q."""

    kind = "subspace"

    def __init__(self, basis: np.ndarray):
        basis = np.asarray(basis, dtype=np.float64)
        if basis.ndim != 2:
            raise ShapeMismatch("basis must be a (nB, eta) matrix")
        self.basis = basis

    def denoise(self, cube: np.ndarray) -> np.ndarray:
        vec = vectorize(cube)
        if vec.size != self.basis.shape[0]:
            raise ShapeMismatch(
                f"cube of size {vec.size} vs basis rows {self.basis.shape[0]}"
            )
        return unvectorize(self.basis @ (self.basis.T @ vec), cube.shape)


class NetworkDenoiser(Denoiser):
    kind = "network"

    def __init__(self, weights):
        self.weights = weights

    def denoise(self, cube: np.ndarray) -> np.ndarray:
        from .networks import run_network

        return run_network(self.weights, cube)


class GenerativeDenoiser(Denoiser):
    """Projects onto the range of a decoder by latent-space descent."""

    kind = "generative"

    def __init__(self, model, descent: "DescentSettings | None" = None):
        self.model = model
        self.descent = descent or DescentSettings()

    def denoise(self, cube: np.ndarray) -> np.ndarray:
        return generative_project(self.model, cube, self.descent).estimate


# ---------------------------------------------------------------------------
# total variation

def _grad2(u):
    # forward differences, zero row/column at the far edge
    gx = np.zeros_like(u)
    gy = np.zeros_like(u)
    gx[:-1, :] = u[1:, :] - u[:-1, :]
    gy[:, :-1] = u[:, 1:] - u[:, :-1]
    return gx, gy


def _div2(px, py):
    # negative adjoint of _grad2
    out = np.zeros_like(px)
    out[:-1, :] += px[:-1, :]
    out[1:, :] -= px[:-1, :]
    out[:, :-1] += py[:, :-1]
    out[:, 1:] -= py[:, :-1]
    return out


def tv_objective(u: np.ndarray, x: np.ndarray, lambda_tv: float) -> float:
    """0.5 ||u - x||^2 + lambda * (sum |grad_x u| + sum |grad_y u|)."""
    gx, gy = _grad2(u)
    return 0.5 * float(np.sum((u - x) ** 2)) + lambda_tv * float(
        np.abs(gx).sum() + np.abs(gy).sum()
    )


def _tv2d(img, lam, iters):
    # projected gradient on the dual of the anisotropic ROF problem;
    # step 1/8 covers the gradient operator norm (||D||^2 <= 8). The dual
    # iterates keep running, but the returned point is the best primal
    # objective seen, which makes the output monotone in `iters`.
    px = np.zeros_like(img)
    py = np.zeros_like(img)
    u = img
    best = img.copy()
    best_obj = tv_objective(img, img, lam)
    for _ in range(iters):
        gx, gy = _grad2(u)
        px = np.clip(px + gx / (8.0 * lam), -1.0, 1.0)
        py = np.clip(py + gy / (8.0 * lam), -1.0, 1.0)
        u = img + lam * _div2(px, py)
        obj = tv_objective(u, img, lam)
        if obj < best_obj:
            best_obj = obj
            best = u.copy()
    return best


def tv_denoise(x: np.ndarray, lambda_tv: float, iters: int = 30) -> np.ndarray:
    """TV-regularized proximal step on a frame or cube (channelwise)."""
    x = np.asarray(x, dtype=np.float64)
    if lambda_tv == 0.0:
        return x.copy()
    if x.ndim == 2:
        return _tv2d(x, lambda_tv, iters)
    if x.ndim != 3:
        raise ShapeMismatch("tv_denoise expects a rank-2 frame or rank-3 cube")
    out = np.empty_like(x)
    for b in range(x.shape[2]):
        out[:, :, b] = _tv2d(x[:, :, b], lambda_tv, iters)
    return out


# ---------------------------------------------------------------------------
# generative models

class LinearDecoder:
    """g(f) = Q f. Projection is closed-form least squares."""

    def __init__(self, basis: np.ndarray):
        basis = np.asarray(basis, dtype=np.float64)
        if basis.ndim != 2:
            raise ShapeMismatch("basis must be (nB, eta)")
        self.basis = basis
        gram = basis.T @ basis
        self.orthonormal = bool(
            np.allclose(gram, np.eye(basis.shape[1]), atol=1e-10)
        )

    @property
    def latent_dim(self) -> int:
        return self.basis.shape[1]

    @property
    def output_dim(self) -> int:
        return self.basis.shape[0]

    @property
    def lipschitz_bound(self) -> float:
        """Exact: the top singular value; 1 for an orthonormal basis."""
        if self.orthonormal:
            return 1.0
        return float(np.linalg.svd(self.basis, compute_uv=False)[0])

    def decode(self, f: np.ndarray) -> np.ndarray:
        return self.basis @ np.asarray(f, dtype=np.float64)

    def best_latent(self, x: np.ndarray) -> np.ndarray:
        if self.orthonormal:
            return self.basis.T @ x
        return np.linalg.lstsq(self.basis, x, rcond=None)[0]


class MLPDecoder:
    """Affine + ReLU stack g(f); last layer is affine with no nonlinearity."""

    def __init__(self, layers: list[tuple[np.ndarray, np.ndarray]]):
        if not layers:
            raise ValueError("decoder needs at least one affine layer")
        self.layers = [
            (np.asarray(w, dtype=np.float64), np.asarray(b, dtype=np.float64))
            for w, b in layers
        ]
        for (w, b) in self.layers:
            if w.ndim != 2 or b.shape != (w.shape[0],):
                raise ShapeMismatch("each layer needs (out,in) weights and (out,) bias")
        for (w0, _), (w1, _) in zip(self.layers, self.layers[1:]):
            if w1.shape[1] != w0.shape[0]:
                raise ShapeMismatch("layer widths do not chain")

    @property
    def latent_dim(self) -> int:
        return self.layers[0][0].shape[1]

    @property
    def output_dim(self) -> int:
        return self.layers[-1][0].shape[0]

    @property
    def lipschitz_bound(self) -> float:
        """Declared upper bound: product of layer spectral norms (relu is 1-Lipschitz)."""
        out = 1.0
        for w, _ in self.layers:
            out *= float(np.linalg.svd(w, compute_uv=False)[0])
        return out

    def decode(self, f: np.ndarray) -> np.ndarray:
        a = np.asarray(f, dtype=np.float64)
        last = len(self.layers) - 1
        for i, (w, b) in enumerate(self.layers):
            a = w @ a + b
            if i < last:
                a = np.maximum(a, 0.0)
        return a

    def objective_grad(self, x: np.ndarray, f: np.ndarray):
        """Value and latent gradient of 0.5 ||x - g(f)||^2 (backprop)."""
        a = np.asarray(f, dtype=np.float64)
        acts = [a]
        pre = []
        last = len(self.layers) - 1
        for i, (w, b) in enumerate(self.layers):
            z = w @ acts[-1] + b
            pre.append(z)
            acts.append(np.maximum(z, 0.0) if i < last else z)
        resid = acts[-1] - x
        value = 0.5 * float(resid @ resid)
        grad = resid
        for i in range(last, -1, -1):
            w, _ = self.layers[i]
            if i < last:
                grad = grad * (pre[i] > 0.0)  # relu subgradient
            grad = w.T @ grad
        return value, grad


@dataclass
class DescentSettings:
    """Multi-restart projected gradient descent over the latent."""

    restarts: int = 8
    steps: int = 500
    step_size: float = 1e-2
    tol: float = 1e-12
    seed: int = 0
    clip_latent: bool = True


@dataclass
class ProjectionResult:
    estimate: np.ndarray
    latent: np.ndarray
    objective: float  # ||x - g(f)||, not squared
    converged: bool
    objective_history: list[float] = field(default_factory=list)


def generative_project(
    model, x: np.ndarray, descent: DescentSettings | None = None
) -> ProjectionResult:
    """Find v = g(f) minimizing ||x - g(f)||; linear models solve exactly.

    Nonlinear models run gradient descent with backtracking (the tracked
    objective never increases) from several random restarts, keeping the
    best. ``converged`` is False when the best run still had a moving
    objective at the step floor; the best point is returned regardless.
    """
    x = np.asarray(x, dtype=np.float64)
    cube_shape = x.shape if x.ndim == 3 else None
    xv = vectorize(x) if cube_shape else x.astype(np.float64)
    if xv.size != model.output_dim:
        raise ShapeMismatch(f"input size {xv.size} vs decoder output {model.output_dim}")

    if isinstance(model, LinearDecoder):
        f = model.best_latent(xv)
        v = model.decode(f)
        obj = float(np.linalg.norm(xv - v))
        est = unvectorize(v, cube_shape) if cube_shape else v
        return ProjectionResult(est, f, obj, True, [obj])

    settings = descent or DescentSettings()
    rng = np.random.default_rng(settings.seed)
    best = None
    for _ in range(max(1, settings.restarts)):
        f = rng.uniform(-1.0, 1.0, model.latent_dim)
        value, grad = model.objective_grad(xv, f)
        step = settings.step_size
        history = [value]
        converged = False
        for _ in range(settings.steps):
            cand = f - step * grad
            if settings.clip_latent:
                cand = np.clip(cand, -1.0, 1.0)
            cand_value, cand_grad = model.objective_grad(xv, cand)
            if cand_value <= value:
                moved = value - cand_value
                f, value, grad = cand, cand_value, cand_grad
                history.append(value)
                step = min(step * 1.2, 1.0)
                if moved <= settings.tol * value:  # relative stall
                    converged = True
                    break
            else:
                step *= 0.5
                if step < 1e-14:
                    converged = True
                    break
        if best is None or value < best[1]:
            best = (f, value, history, converged)
    f, value, history, converged = best
    v = model.decode(f)
    obj = float(np.linalg.norm(xv - v))
    est = unvectorize(v, cube_shape) if cube_shape else v
    return ProjectionResult(est, f, obj, converged, [float(h) for h in history])


def lipschitz_estimate(model, samples: int, seed: int = 0) -> float:
    """Sampled lower bound on the decoder's Lipschitz constant.

    Draws pairs from the [-1, 1] latent alphabet and maxes the ratio
    ||g(f) - g(f')|| / ||f - f'||.
    """
    if samples < 2:
        raise ValueError("samples must be >= 2")
    rng = np.random.default_rng(seed)
    best = 0.0
    for _ in range(samples):
        f = rng.uniform(-1.0, 1.0, model.latent_dim)
        fp = rng.uniform(-1.0, 1.0, model.latent_dim)
        denom = np.linalg.norm(f - fp)
        if denom == 0.0:
            continue
        ratio = np.linalg.norm(model.decode(f) - model.decode(fp)) / denom
        best = max(best, float(ratio))
    return best
