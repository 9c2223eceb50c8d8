"""Video and spectral capture simulation."""

import numpy as np
import pytest

from snapsci.errors import ShapeMismatch
from snapsci.forward import (
    NoiseSpec,
    SpectralGeometry,
    build_shifted_masks,
    shear,
    spectral_forward,
    unshear,
    video_forward,
)
from snapsci.operators import SciOperator
from snapsci.tensors import vectorize, vectorize_frame


def test_identity_mask_single_frame():
    rng = np.random.default_rng(0)
    x = rng.standard_normal((4, 5, 1))
    y = video_forward(x, np.ones_like(x))
    np.testing.assert_array_equal(y, x[:, :, 0])


def test_hand_summed_two_frame_example():
    # diagonal pixels see frame 1 (value 1), off-diagonal see frame 2 (value 2)
    x = np.stack([np.ones((2, 2)), 2 * np.ones((2, 2))], axis=2)
    c1 = np.eye(2)
    masks = np.stack([c1, 1 - c1], axis=2)
    y = video_forward(x, masks)
    np.testing.assert_array_equal(y, [[1.0, 2.0], [2.0, 1.0]])


def test_matches_dense_operator():
    rng = np.random.default_rng(1)
    x = rng.standard_normal((4, 4, 3))
    masks = rng.standard_normal((4, 4, 3))
    y = video_forward(x, masks)
    dense = SciOperator(masks).to_dense()
    np.testing.assert_allclose(
        vectorize_frame(y), dense @ vectorize(x), rtol=0, atol=1e-12
    )


def test_linearity_with_noise_off():
    rng = np.random.default_rng(2)
    masks = rng.standard_normal((3, 4, 2))
    x1 = rng.standard_normal((3, 4, 2))
    x2 = rng.standard_normal((3, 4, 2))
    lhs = video_forward(1.7 * x1 - 0.3 * x2, masks)
    rhs = 1.7 * video_forward(x1, masks) - 0.3 * video_forward(x2, masks)
    np.testing.assert_allclose(lhs, rhs, atol=1e-12)


def test_gaussian_noise_is_seeded():
    x = np.zeros((8, 8, 2))
    masks = np.ones_like(x)
    noise = NoiseSpec("gaussian", sigma=0.5, seed=7)
    y1 = video_forward(x, masks, noise)
    y2 = video_forward(x, masks, noise)
    np.testing.assert_array_equal(y1, y2)
    assert np.std(y1) > 0


def test_shape_mismatch_raises():
    with pytest.raises(ShapeMismatch):
        video_forward(np.zeros((2, 2, 2)), np.zeros((2, 2, 3)))


def test_shifted_masks_single_channel():
    m = np.arange(6.0).reshape(2, 3)
    geom = SpectralGeometry(n_lambda=1, shift_step=2)
    out = build_shifted_masks(m, geom)
    assert out.shape == (2, 3, 1)
    np.testing.assert_array_equal(out[:, :, 0], m)


def test_shifted_masks_hand_example():
    m = np.array([[1.0, 2.0]])  # 1x2 mask with entries m0, m1
    geom = SpectralGeometry(n_lambda=2, shift_step=1)
    out = build_shifted_masks(m, geom)
    np.testing.assert_array_equal(out[:, :, 0], [[1.0, 2.0, 0.0]])
    np.testing.assert_array_equal(out[:, :, 1], [[0.0, 1.0, 2.0]])


def test_shifted_masks_paper_width():
    m = np.ones((4, 256))
    geom = SpectralGeometry(n_lambda=28, shift_step=2)
    out = build_shifted_masks(m, geom)
    assert out.shape == (4, 256 + 27 * 2, 28)


def test_shear_step_zero_is_identity():
    rng = np.random.default_rng(3)
    cube = rng.standard_normal((3, 4, 5))
    geom = SpectralGeometry(n_lambda=5, shift_step=0)
    np.testing.assert_array_equal(shear(cube, geom), cube)


def test_shear_moves_an_impulse():
    cube = np.zeros((2, 3, 2))
    cube[0, 0, 1] = 1.0
    geom = SpectralGeometry(n_lambda=2, shift_step=2)
    out = shear(cube, geom)
    assert out.shape == (2, 5, 2)
    assert out[0, 2, 1] == 1.0
    assert np.count_nonzero(out) == 1


def test_shear_preserves_values_and_norm():
    rng = np.random.default_rng(4)
    cube = rng.standard_normal((4, 6, 3))
    geom = SpectralGeometry(n_lambda=3, shift_step=1)
    out = shear(cube, geom)
    assert np.isclose(np.linalg.norm(out), np.linalg.norm(cube))
    assert sorted(out[out != 0.0].tolist()) == sorted(cube[cube != 0.0].tolist())


def test_unshear_inverts_shear():
    rng = np.random.default_rng(5)
    cube = rng.standard_normal((4, 6, 3))
    geom = SpectralGeometry(n_lambda=3, shift_step=1)
    np.testing.assert_array_equal(unshear(shear(cube, geom), geom), cube)


def test_unshear_with_nonzero_reference_channel():
    rng = np.random.default_rng(6)
    cube = rng.standard_normal((2, 5, 4))
    geom = SpectralGeometry(n_lambda=4, shift_step=1, reference_channel=2)
    np.testing.assert_array_equal(unshear(shear(cube, geom), geom), cube)


def test_spectral_single_channel_all_ones_mask():
    rng = np.random.default_rng(7)
    scene = rng.standard_normal((3, 4, 1))
    geom = SpectralGeometry(n_lambda=1, shift_step=2)
    y = spectral_forward(scene, np.ones((3, 4)), geom)
    np.testing.assert_array_equal(y, scene[:, :, 0])


def test_spectral_hand_computed_two_channel():
    # 1x2 scene, two channels, step 1, mask [m0, m1]
    scene = np.zeros((1, 2, 2))
    scene[0, :, 0] = [1.0, 2.0]
    scene[0, :, 1] = [3.0, 4.0]
    mask = np.array([[0.5, 0.25]])
    geom = SpectralGeometry(n_lambda=2, shift_step=1)
    y = spectral_forward(scene, mask, geom)
    # channel 0 contributes [0.5, 0.5, 0], channel 1 shifts to [0, 1.5, 1.0]
    np.testing.assert_allclose(y, [[0.5, 2.0, 1.0]], atol=1e-15)


def test_spectral_factors_through_video_path():
    rng = np.random.default_rng(8)
    scene = rng.standard_normal((5, 7, 4))
    mask = rng.random((5, 7))
    geom = SpectralGeometry(n_lambda=4, shift_step=2)
    direct = spectral_forward(scene, mask, geom)
    via_video = video_forward(shear(scene, geom), build_shifted_masks(mask, geom))
    np.testing.assert_allclose(direct, via_video, rtol=0, atol=1e-12)
