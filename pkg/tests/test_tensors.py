"""Vectorization conventions and the .sct container."""

import numpy as np
import pytest

from snapsci.errors import BadMagic, ShapeMismatch, TruncatedPayload, UnsupportedRank
from snapsci.tensors import (
    read_tensor,
    unvectorize,
    unvectorize_frame,
    vectorize,
    vectorize_frame,
    write_tensor,
)


def test_vectorize_degenerate_two_channel():
    cube = np.array([[[1.0, 2.0]]])  # 1x1x2
    np.testing.assert_array_equal(vectorize(cube), [1.0, 2.0])


def test_vectorize_column_stacks_each_slice():
    cube = np.array([[1.0, 2.0], [3.0, 4.0]]).reshape(2, 2, 1)
    np.testing.assert_array_equal(vectorize(cube), [1.0, 3.0, 2.0, 4.0])


def test_vectorize_round_trip():
    rng = np.random.default_rng(0)
    cube = rng.standard_normal((3, 4, 2))
    np.testing.assert_array_equal(unvectorize(vectorize(cube), cube.shape), cube)


def test_vectorize_block_structure():
    rng = np.random.default_rng(1)
    cube = rng.standard_normal((5, 3, 4))
    n = 5 * 3
    vec = vectorize(cube)
    for b in range(4):
        slice_alone = cube[:, :, b : b + 1]
        np.testing.assert_array_equal(vec[b * n : (b + 1) * n], vectorize(slice_alone))


def test_frame_vectorize_matches_single_slice_cube():
    rng = np.random.default_rng(2)
    frame = rng.standard_normal((4, 6))
    np.testing.assert_array_equal(
        vectorize_frame(frame), vectorize(frame[:, :, None])
    )
    np.testing.assert_array_equal(
        unvectorize_frame(vectorize_frame(frame), frame.shape), frame
    )


def test_vectorize_rejects_wrong_rank():
    with pytest.raises(ShapeMismatch):
        vectorize(np.zeros((2, 2)))
    with pytest.raises(ShapeMismatch):
        unvectorize(np.zeros(5), (2, 2, 1))


def test_write_read_zeros(tmp_path):
    path = tmp_path / "z.sct"
    write_tensor(path, np.zeros((2, 2)))
    np.testing.assert_array_equal(read_tensor(path), np.zeros((2, 2)))


def test_round_trip_is_bit_exact_for_float32_values(tmp_path):
    rng = np.random.default_rng(3)
    cube = rng.standard_normal((256, 256, 8)).astype(np.float32).astype(np.float64)
    path = tmp_path / "c.sct"
    write_tensor(path, cube)
    back = read_tensor(path)
    assert back.dtype == np.float64
    assert np.array_equal(back, cube)
    # file-level byte round trip
    path2 = tmp_path / "c2.sct"
    write_tensor(path2, back)
    assert path.read_bytes() == path2.read_bytes()


def test_negative_zero_survives(tmp_path):
    path = tmp_path / "nz.sct"
    write_tensor(path, np.array([-0.0, 0.0, -1.5]))
    back = read_tensor(path)
    assert np.signbit(back[0]) and not np.signbit(back[1])


def test_bad_magic_rejected(tmp_path):
    path = tmp_path / "bad.sct"
    path.write_bytes(b"XXXX" + b"\x00" * 16)
    with pytest.raises(BadMagic):
        read_tensor(path)


def test_truncated_payload_rejected(tmp_path):
    path = tmp_path / "t.sct"
    write_tensor(path, np.ones((3, 3)))
    raw = path.read_bytes()
    path.write_bytes(raw[:-4])
    with pytest.raises(TruncatedPayload):
        read_tensor(path)
    path.write_bytes(raw + b"\x00\x00\x00\x00")
    with pytest.raises(TruncatedPayload):
        read_tensor(path)


def test_unsupported_rank_rejected(tmp_path):
    path = tmp_path / "r.sct"
    with pytest.raises(UnsupportedRank):
        write_tensor(path, np.zeros((1, 1, 1, 1, 1)))
    # forge a rank-5 header by hand
    import struct

    payload = struct.pack("<5Q", 1, 1, 1, 1, 1) + b"\x00" * 4
    path.write_bytes(b"SCT1" + struct.pack("<I", 5) + payload)
    with pytest.raises(UnsupportedRank):
        read_tensor(path)


def test_rank4_allowed(tmp_path):
    path = tmp_path / "w.sct"
    rng = np.random.default_rng(4)
    w = rng.standard_normal((2, 3, 4, 5)).astype(np.float32)
    write_tensor(path, w)
    np.testing.assert_array_equal(read_tensor(path), w.astype(np.float64))


def test_read_pgm_binary(tmp_path):
    from snapsci.tensors import read_pgm

    path = tmp_path / "img.pgm"
    pixels = bytes([0, 128, 255, 64, 32, 16])
    path.write_bytes(b"P5\n# a comment\n3 2\n255\n" + pixels)
    img = read_pgm(path)
    assert img.shape == (2, 3)
    assert img[0, 0] == 0.0 and img[0, 2] == 1.0
    assert abs(img[0, 1] - 128 / 255) < 1e-12
    with pytest.raises(BadMagic):
        read_pgm_path = tmp_path / "ascii.pgm"
        read_pgm_path.write_bytes(b"P2\n1 1\n255\n0")
        read_pgm(read_pgm_path)


def test_pgm_as_cli_input(tmp_path):
    from snapsci.cli import main
    from snapsci.tensors import read_pgm

    # use a PGM as the 2D spectral mask
    mask_path = tmp_path / "mask.pgm"
    mask_path.write_bytes(b"P5\n4 4\n255\n" + bytes(range(0, 256, 16)))
    rng = np.random.default_rng(0)
    scene = rng.random((4, 4, 2))
    write_tensor(tmp_path / "scene.sct", scene)
    out = tmp_path / "meas.sct"
    code = main(["simulate", "--kind", "spectral", "--cube",
                 str(tmp_path / "scene.sct"), "--mask", str(mask_path),
                 "--out", str(out), "--shift-step", "1"])
    assert code == 0
    from snapsci.forward import SpectralGeometry, spectral_forward

    expected = spectral_forward(read_tensor(tmp_path / "scene.sct"),
                                read_pgm(mask_path),
                                SpectralGeometry(n_lambda=2, shift_step=1))
    np.testing.assert_allclose(read_tensor(out), expected.astype(np.float32),
                               atol=1e-7)
