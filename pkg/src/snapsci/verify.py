"""Numerical verification utilities: dense oracles and gradient checks."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import TooLarge
from .operators import SciOperator
from .tensors import unvectorize, vectorize, vectorize_frame

ORACLE_GUARD = 4096  # max nB for the dense suite


def finite_diff_check(objective, point: np.ndarray, eps: float = 1e-5) -> float:
    """Max relative discrepancy between analytic and central-difference grads.

    ``objective(p)`` must return ``(value, gradient)``. The relative error
    at each coordinate is |analytic - numeric| / max(|analytic| + |numeric|,
    1e-8), and the max over coordinates comes back.
    """
    if eps <= 0:
        raise ValueError("eps must be > 0")
    point = np.asarray(point, dtype=np.float64)
    _, grad = objective(point)
    grad = np.asarray(grad, dtype=np.float64)
    numeric = np.empty_like(point)
    for i in range(point.size):
        shift = np.zeros_like(point)
        shift.flat[i] = eps
        up, _ = objective(point + shift)
        down, _ = objective(point - shift)
        numeric.flat[i] = (up - down) / (2.0 * eps)
    scale = np.maximum(np.abs(grad) + np.abs(numeric), 1e-8)
    return float(np.max(np.abs(grad - numeric) / scale))


@dataclass
class OracleCheck:
    name: str
    max_rel_error: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_rel_error <= self.tolerance


@dataclass
class OracleReport:
    checks: list[OracleCheck]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def lines(self) -> list[str]:
        return [
            f"{'PASS' if c.passed else 'FAIL'} {c.name}: "
            f"max_rel_error={c.max_rel_error:.3e} (tol {c.tolerance:g})"
            for c in self.checks
        ]


def _rel(err: np.ndarray, ref: np.ndarray) -> float:
    denom = max(float(np.linalg.norm(ref)), 1e-300)
    return float(np.linalg.norm(err)) / denom


def dense_oracle_suite(
    op: SciOperator, seed: int = 0, tolerance: float = 1e-10
) -> OracleReport:
    """Compare every structured operation against the dense assembly.

    Covers forward, adjoint, the Gram diagonal, manifold projection and
    the ADMM x-update on random data. Guarded to small instances.
    """
    n_x, n_y, B = op.shape
    n = n_x * n_y
    if n * B > ORACLE_GUARD:
        raise TooLarge(f"oracle suite limited to nB <= {ORACLE_GUARD}")
    dense = op.to_dense()
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n_x, n_y, B))
    y = rng.standard_normal((n_x, n_y))
    v = rng.standard_normal((n_x, n_y, B))
    u = rng.standard_normal((n_x, n_y, B))
    gamma = 0.37

    checks = []
    fwd = vectorize_frame(op.forward(x))
    fwd_ref = dense @ vectorize(x)
    checks.append(OracleCheck("forward", _rel(fwd - fwd_ref, fwd_ref), tolerance))

    adj = vectorize(op.adjoint(y))
    adj_ref = dense.T @ vectorize_frame(y)
    checks.append(OracleCheck("adjoint", _rel(adj - adj_ref, adj_ref), tolerance))

    r = vectorize_frame(op.r_diagonal())
    r_ref = np.diag(dense @ dense.T)
    floored = r_ref < op.r_floor
    r_err = np.where(floored, 0.0, r - r_ref)
    checks.append(OracleCheck("r_diagonal", _rel(r_err, np.maximum(r_ref, 1.0)), tolerance))

    proj = vectorize(op.project_to_manifold(v, y))
    gram = dense @ dense.T
    proj_ref = vectorize(v) + dense.T @ np.linalg.solve(
        gram, vectorize_frame(y) - dense @ vectorize(v)
    )
    checks.append(OracleCheck("project", _rel(proj - proj_ref, proj_ref), tolerance))

    admm = vectorize(op.admm_x_update(y, v, u, gamma))
    nB = dense.shape[1]
    admm_ref = np.linalg.solve(
        dense.T @ dense + gamma * np.eye(nB),
        dense.T @ vectorize_frame(y) + gamma * vectorize(v + u),
    )
    checks.append(OracleCheck("admm_x_update", _rel(admm - admm_ref, admm_ref), tolerance))
    return OracleReport(checks)
