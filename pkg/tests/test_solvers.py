"""Reconstruction loops: fixed points, oracle contraction, losses, GAP-TV."""

import numpy as np
import pytest

from snapsci.denoisers import IdentityDenoiser, SubspaceDenoiser
from snapsci.metrics import psnr
from snapsci.operators import SciOperator
from snapsci.solvers import (
    SolverConfig,
    admm_net_reconstruct,
    gap_net_reconstruct,
    gap_tv_reconstruct,
    pnp_gap_reconstruct,
    rmse_loss,
    weighted_loss,
)
from snapsci.synthetic import bernoulli_masks, moving_square_video
from snapsci.tensors import unvectorize, vectorize


def oracle_setup(n_side, channels, eta, seed):
    """Gaussian masks, orthonormal basis, in-range signal, its measurement."""
    rng = np.random.default_rng(seed)
    shape = (n_side, n_side, channels)
    op = SciOperator(rng.standard_normal(shape))
    nB = n_side * n_side * channels
    basis, _ = np.linalg.qr(rng.standard_normal((nB, eta)))
    truth = unvectorize(basis @ rng.uniform(-1, 1, eta), shape)
    return op, basis, truth, op.forward(truth)


def test_single_frame_ones_mask_exact_recovery():
    rng = np.random.default_rng(0)
    truth = rng.random((6, 6, 1))
    op = SciOperator(np.ones((6, 6, 1)))
    y = op.forward(truth)
    cfg = SolverConfig("gap_net", 1, [IdentityDenoiser()])
    out, trace = gap_net_reconstruct(op, y, cfg, truth=truth)
    np.testing.assert_allclose(out, truth, atol=1e-12)
    assert len(trace.residuals) == 2  # v(0) plus one stage


def test_identity_denoisers_reach_fixed_point_after_one_stage():
    rng = np.random.default_rng(1)
    op = SciOperator(rng.standard_normal((5, 5, 3)))
    y = rng.standard_normal((5, 5))
    cfg = SolverConfig("gap_net", 4, [IdentityDenoiser()] * 4, record_estimates=True)
    _, trace = gap_net_reconstruct(op, y, cfg)
    v1, v2 = trace.estimates[1], trace.estimates[2]
    assert np.linalg.norm(v2 - v1) <= 1e-12 * max(np.linalg.norm(v1), 1.0)


def test_projection_residual_vanishes_every_stage():
    rng = np.random.default_rng(2)
    op = SciOperator(rng.standard_normal((6, 6, 2)))
    truth = rng.standard_normal((6, 6, 2))
    y = op.forward(truth)
    cfg = SolverConfig("gap_net", 3, [IdentityDenoiser()] * 3)
    _, trace = gap_net_reconstruct(op, y, cfg)
    # after the first projection the identity loop sits on the manifold
    assert all(r <= 1e-10 * np.linalg.norm(y) for r in trace.residuals[1:])


def test_subspace_oracle_contracts_to_machine_precision():
    op, basis, truth, y = oracle_setup(8, 4, 5, seed=3)  # n=64 regime
    cfg = SolverConfig(
        "pnp_gap", 30, SubspaceDenoiser(basis), projection_scale=4.0
    )
    out, trace = gap_net_reconstruct(op, y, cfg, truth=truth)
    rel = np.linalg.norm(out - truth) / np.linalg.norm(truth)
    assert rel <= 1e-6
    errs = np.asarray(trace.error_norms)
    floor = 1e-12 * np.linalg.norm(truth)
    assert (np.diff(errs[2:]) <= floor).all()


def test_trace_has_stage_count_plus_one_entries():
    op, basis, truth, y = oracle_setup(4, 2, 3, seed=4)
    cfg = SolverConfig("pnp_gap", 7, SubspaceDenoiser(basis), projection_scale=2.0)
    _, trace = gap_net_reconstruct(op, y, cfg, truth=truth)
    assert len(trace.residuals) == 8
    assert len(trace.error_norms) == 8
    assert len(trace.psnrs) == 8


def test_admm_zero_measurement_stays_zero():
    rng = np.random.default_rng(5)
    op = SciOperator(rng.standard_normal((4, 4, 2)))
    cfg = SolverConfig("admm_net", 5, [IdentityDenoiser()] * 5, gamma=0.3)
    out, trace = admm_net_reconstruct(op, np.zeros((4, 4)), cfg)
    np.testing.assert_array_equal(out, np.zeros((4, 4, 2)))
    assert all(r == 0.0 for r in trace.residuals)


def test_admm_small_gamma_first_stage_close_to_gap_projection():
    rng = np.random.default_rng(6)
    op = SciOperator(rng.standard_normal((5, 5, 3)))
    y = rng.standard_normal((5, 5))
    gap_cfg = SolverConfig("gap_net", 1, [IdentityDenoiser()])
    gap_out, _ = gap_net_reconstruct(op, y, gap_cfg)
    admm_cfg = SolverConfig("admm_net", 1, [IdentityDenoiser()], gamma=1e-6)
    admm_out, _ = admm_net_reconstruct(op, y, admm_cfg)
    rel = np.linalg.norm(admm_out - gap_out) / np.linalg.norm(gap_out)
    assert rel <= 1e-3


def test_gap_and_admm_agree_on_oracle_subspace():
    op, basis, truth, y = oracle_setup(8, 4, 5, seed=7)
    gap_cfg = SolverConfig("pnp_gap", 30, SubspaceDenoiser(basis), projection_scale=4.0)
    gap_out, _ = gap_net_reconstruct(op, y, gap_cfg, truth=truth)
    admm_cfg = SolverConfig("admm_net", 60, [SubspaceDenoiser(basis)] * 60, gamma=5.0)
    admm_out, trace = admm_net_reconstruct(op, y, admm_cfg, truth=truth)
    rel = np.linalg.norm(admm_out - gap_out) / np.linalg.norm(gap_out)
    assert rel <= 1e-5


def test_admm_primal_residual_decays_in_oracle_setting():
    op, basis, truth, y = oracle_setup(8, 4, 5, seed=8)
    stage = SubspaceDenoiser(basis)
    v = op.adjoint(y)
    u = np.zeros_like(v)
    gamma = 5.0
    primal = None
    for _ in range(50):
        x = op.admm_x_update(y, v, u, gamma)
        v = stage.denoise(x - u)
        u = u - (x - v)
        primal = np.linalg.norm(x - v)
    assert primal <= 1e-6


def test_stage_count_monotonicity_oracle_psnr():
    stage_counts = (1, 3, 5, 9)
    means = []
    for K in stage_counts:
        scores = []
        for trial in range(20):
            op, basis, truth, y = oracle_setup(4, 4, 6, seed=900 + trial)
            cfg = SolverConfig(
                "pnp_gap", K, SubspaceDenoiser(basis), projection_scale=4.0
            )
            out, _ = gap_net_reconstruct(op, y, cfg)
            err = np.mean((out - truth) ** 2)
            scores.append(-10.0 * np.log10(max(err, 1e-30)))
        means.append(np.mean(scores))
    assert all(b >= a - 1e-9 for a, b in zip(means, means[1:]))


def test_gap_tv_zero_weight_equals_identity_gap():
    rng = np.random.default_rng(9)
    op = SciOperator(bernoulli_masks(8, 8, 3, seed=10))
    y = rng.standard_normal((8, 8))
    tv_out, _ = gap_tv_reconstruct(op, y, iters=5, lambda_tv=0.0)
    id_out, _ = pnp_gap_reconstruct(op, y, IdentityDenoiser(), 5)
    np.testing.assert_allclose(tv_out, id_out, atol=1e-12)


def test_gap_tv_moving_square_beats_projected_init_by_5db():
    truth = moving_square_video(32, 32, 8, seed=11)
    masks = bernoulli_masks(32, 32, 8, seed=12)
    op = SciOperator(masks)
    y = op.forward(truth)
    out, _ = gap_tv_reconstruct(op, y, iters=100, lambda_tv=0.07, truth=truth)
    score = psnr(truth, out)
    baseline = psnr(truth, op.project_to_manifold(op.adjoint(y), y))
    assert score >= 25.0
    assert score >= baseline + 5.0


def test_rmse_loss_and_weighted_loss():
    rng = np.random.default_rng(12)
    x = rng.standard_normal((4, 4, 2))
    assert rmse_loss(x, x) == 0.0
    bump = rng.standard_normal((4, 4, 2))
    bump /= np.linalg.norm(bump)
    assert np.isclose(weighted_loss(x, x + bump, x + bump, x + bump), 2.0)
    v = rng.standard_normal((4, 4, 2))
    assert np.isclose(rmse_loss(x, v), np.linalg.norm((x - v).ravel()))


def test_solver_config_validation():
    with pytest.raises(ValueError):
        SolverConfig("gap_net", 3, [IdentityDenoiser()] * 2).stage_denoisers()
    with pytest.raises(ValueError):
        SolverConfig("nonsense", 3, [IdentityDenoiser()] * 3).stage_denoisers()
    with pytest.raises(ValueError):
        SolverConfig("admm_net", 2, [IdentityDenoiser()] * 2, gamma=0.0).stage_denoisers()
    shared = SolverConfig("pnp_gap", 4, IdentityDenoiser())
    assert len(shared.stage_denoisers()) == 4
