import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from threebody1d.geometry import (JacobiFrame, frame_rotation, from_frame, in_cross_support,
                                  laplacian_invariance_check, rotate, rotation_matrix, to_frame)

finite = st.floats(-50, 50, allow_nan=False)


def _zero_sum(a, b):
    return np.array([a, b, -a - b])


def test_frame_one_coordinates():
    z = _zero_sum(0.7, -1.9)
    x, y = to_frame(z, 1)
    assert np.isclose(x, (z[2] - z[1]) / np.sqrt(2))
    assert np.isclose(y, np.sqrt(1.5) * z[0])


def test_com_violation_rejected():
    with pytest.raises(ValueError):
        to_frame([1.0, 0.0, 0.0], 1)
    with pytest.raises(ValueError):
        JacobiFrame(4)


@settings(max_examples=50)
@given(a=finite, b=finite)
def test_round_trip_and_norm(a, b):
    z = _zero_sum(a, b)
    for i in (1, 2, 3):
        p = to_frame(z, i)
        assert np.allclose(from_frame(p, i), z, atol=1e-12 * (1 + abs(a) + abs(b)))
        # the frame map is an isometry of the zero-sum plane
        assert np.isclose(p @ p, z @ z)


def test_rotations_are_proper_120_degrees():
    for i, j in itertools.permutations((1, 2, 3), 2):
        r = frame_rotation(i, j)
        assert abs(r.determinant - 1) < 1e-14
        assert np.isclose(abs(np.degrees(r.angle)), 120.0)
        assert np.allclose(r.matrix @ r.matrix.T, np.eye(2), atol=1e-14)


def test_rotation_cycle_is_identity():
    m = rotation_matrix(3, 1) @ rotation_matrix(2, 3) @ rotation_matrix(1, 2)
    assert np.allclose(m, np.eye(2), atol=1e-14)


@settings(max_examples=30)
@given(a=finite, b=finite)
def test_rotation_consistent_with_frames(a, b):
    z = _zero_sum(a, b)
    for i, j in itertools.permutations((1, 2, 3), 2):
        assert np.allclose(rotate(to_frame(z, i), i, j), to_frame(z, j), atol=1e-10)


def test_laplacian_invariance():
    f = lambda p: np.exp(-(p[:, 0] ** 2 + 2 * (p[:, 1] - 0.3) ** 2)) * np.cos(p[:, 0])
    for i, j in ((1, 2), (1, 3), (2, 3)):
        assert laplacian_invariance_check(f, i, j) < 1e-6


def test_cross_support():
    pts = np.array([[0.0, 5.0], [5.0, 0.1], [3.0, 3.0]])
    mask = in_cross_support(pts, 0.5)
    assert mask[0]
    assert not mask[2]
    # (5, y) with small y lies in a rotated strip only if its x_j is small
    x = [abs(rotate(pts[1], 1, j)[0]) for j in (1, 2, 3)]
    assert mask[1] == (min(x) < 0.5)


def test_origin_and_worked_example():
    assert np.allclose(to_frame([0.0, 0.0, 0.0], 1), 0.0)
    assert np.allclose(to_frame([1.0, -1.0, 0.0], 3), [-np.sqrt(2), 0.0])
    assert np.allclose(rotate([0.3, 0.4], 2, 2), [0.3, 0.4])


def test_laplacian_harmonic_and_plane_wave():
    from threebody1d.geometry import laplacian_fd

    pts = np.array([[0.1, 0.2], [-0.5, 0.7]])
    harm = lambda p: p[:, 0] ** 2 - p[:, 1] ** 2
    k, q = 1.3, -0.4
    wave = lambda p: np.exp(1j * (k * p[:, 0] + q * p[:, 1]))
    for frame in (1, 2, 3):
        assert np.allclose(laplacian_fd(harm, pts, frame, 1 / 64), 0.0, atol=1e-9)
        assert np.allclose(laplacian_fd(wave, pts, frame, 1 / 128), -(k * k + q * q) * wave(pts), atol=1e-7)
