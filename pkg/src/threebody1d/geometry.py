"""Jacobi frames on the centre-of-mass plane and the rotations between them.

A configuration of three particles on the line is a triple ``(z1, z2, z3)``
with zero sum.  Frame ``i`` uses the pair ``(x_i, y_i)`` with

    x_i = (z_k - z_j) / sqrt(2),   y_i = sqrt(3/2) * z_i,

where ``(i, j, k)`` runs over the cyclic orderings (1,2,3), (2,3,1), (3,1,2).
Rotation matrices are obtained by composing these linear maps numerically,
never from hardcoded angles.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

_CYCLIC = {1: (2, 3), 2: (3, 1), 3: (1, 2)}
COM_TOL = 1e-12


def _check_index(i: int) -> int:
    if i not in _CYCLIC:
        raise ValueError(f"frame index must be 1, 2 or 3, got {i!r}")
    return i


def _forward_matrix(i: int) -> np.ndarray:
    """2x3 matrix mapping a z-triple to (x_i, y_i)."""
    j, k = _CYCLIC[i]
    m = np.zeros((2, 3))
    m[0, k - 1] = 1.0 / np.sqrt(2.0)
    m[0, j - 1] = -1.0 / np.sqrt(2.0)
    m[1, i - 1] = np.sqrt(1.5)
    # project the rows onto the zero-sum plane; identical action on it
    return m - m.mean(axis=1, keepdims=True)


@dataclass(frozen=True)
class JacobiFrame:
    """One of the three Jacobi coordinate pairs on the plane.

    Parameters
    ----------
    index : int
        Frame label, 1, 2 or 3.
    """

    index: int
    forward: np.ndarray = field(init=False, repr=False, compare=False)
    inverse: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        _check_index(self.index)
        fwd = _forward_matrix(self.index)
        # restricted to the plane the map is orthogonal, so the inverse is
        # the transpose of the forward map on that plane
        object.__setattr__(self, "forward", fwd)
        object.__setattr__(self, "inverse", fwd.T.copy())

    def to_frame(self, z) -> np.ndarray:
        return to_frame(z, self.index)

    def from_frame(self, point) -> np.ndarray:
        return from_frame(point, self.index)


def to_frame(z, i: int) -> np.ndarray:
    """Map zero-sum triples to the Jacobi pair of frame ``i``.

    Parameters
    ----------
    z : array_like, shape (3,) or (n, 3)
    i : int

    Returns
    -------
    ndarray, shape (2,) or (n, 2)
    """
    _check_index(i)
    z = np.asarray(z, dtype=float)
    if z.shape[-1] != 3:
        raise ValueError("z must have trailing dimension 3")
    com = np.abs(z.sum(axis=-1))
    if np.any(com > COM_TOL * np.maximum(1.0, np.abs(z).max(axis=-1))):
        raise ValueError(f"centre-of-mass constraint violated: |z1+z2+z3| = {com.max():.3e}")
    return z @ _forward_matrix(i).T


def from_frame(point, i: int) -> np.ndarray:
    """Inverse of :func:`to_frame`; returns zero-sum triples."""
    _check_index(i)
    p = np.asarray(point, dtype=float)
    return p @ _forward_matrix(i)


@dataclass(frozen=True)
class FrameRotation:
    """Orthogonal 2x2 map from frame ``source`` to frame ``target``."""

    source: int
    target: int
    matrix: np.ndarray = field(repr=False, compare=False)

    @property
    def determinant(self) -> float:
        return float(np.linalg.det(self.matrix))

    @property
    def angle(self) -> float:
        """Rotation angle of the proper part, in radians."""
        m = self.matrix
        if self.determinant < 0:
            m = m @ np.diag([1.0, -1.0])
        return float(np.arctan2(m[1, 0], m[0, 0]))

    def apply(self, point) -> np.ndarray:
        return np.asarray(point, dtype=float) @ self.matrix.T


def rotation_matrix(i: int, j: int) -> np.ndarray:
    """Matrix ``M`` with ``(x_j, y_j) = M (x_i, y_i)``."""
    _check_index(i)
    _check_index(j)
    return _forward_matrix(j) @ _forward_matrix(i).T


def frame_rotation(i: int, j: int) -> FrameRotation:
    return FrameRotation(i, j, rotation_matrix(i, j))


def rotate(point, i: int, j: int) -> np.ndarray:
    """Convert frame-``i`` coordinates to frame ``j``.

    Works on a single point ``(2,)`` or an array ``(n, 2)``.
    """
    if i == j:
        return np.array(point, dtype=float, copy=True)
    return np.asarray(point, dtype=float) @ rotation_matrix(i, j).T


def laplacian_fd(f: Callable, points, frame: int, h: float, reference: int = 1) -> np.ndarray:
    """Fourth-order finite-difference Laplacian using frame-aligned stencils.

    ``f`` takes an array of shape (n, 2) of reference-frame coordinates.
    The stencil is laid out along the axes of ``frame`` and mapped back to
    the reference frame before ``f`` is evaluated.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    rot = rotation_matrix(frame, reference)
    ex, ey = rot[:, 0], rot[:, 1]
    coef = {-2: -1.0 / 12, -1: 4.0 / 3, 0: -5.0 / 2, 1: 4.0 / 3, 2: -1.0 / 12}
    out = 2 * coef[0] * f(pts)
    for s, c in coef.items():
        if s == 0:
            continue
        out = out + c * (f(pts + s * h * ex) + f(pts + s * h * ey))
    return out / h**2


def laplacian_invariance_check(f: Callable, i: int, j: int, h: float = 1.0 / 128,
                               points=None, reference: int = 1) -> float:
    """Max deviation between frame-``i`` and frame-``j`` finite-difference Laplacians.

    Parameters
    ----------
    f : callable
        Test function of reference-frame coordinates, shape (n, 2) -> (n,).
    i, j : int
        Frames whose axes orient the two stencils.
    h : float
        Stencil spacing.
    points : array_like, optional
        Common evaluation points; defaults to a 9x9 patch of [-1, 1]^2.
    """
    if points is None:
        g = np.linspace(-1.0, 1.0, 9)
        X, Y = np.meshgrid(g, g, indexing="ij")
        points = np.column_stack([X.ravel(), Y.ravel()])
    li = laplacian_fd(f, points, i, h, reference)
    lj = laplacian_fd(f, points, j, h, reference)
    return float(np.max(np.abs(li - lj)))


def in_cross_support(points, a: float, reference: int = 1) -> np.ndarray:
    """Membership in the union of the three strips ``|x_i| < a``."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    mask = np.zeros(len(pts), dtype=bool)
    for i in (1, 2, 3):
        mask |= np.abs(rotate(pts, reference, i)[:, 0]) < a
    return mask
