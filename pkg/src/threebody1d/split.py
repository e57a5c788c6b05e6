"""Rank-two singular split ``Gamma_j Gamma_k = A_jk + B_jk``.

``A_jk`` has its range in the span of the two type-A functions

    u_pm(z) = v(x_j) phi_j(x_j, 0) |y_j|^{-1/2} exp(i |y_j| sqrt(lam)) chi(pm y_j)

and is stored factorised as ``U @ C`` with ``U`` of shape (N, 2).  The row
functionals ``C`` come from a least-squares projection of the product's
far-field strip rows onto ``u_pm``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import GridKernel
from .operators import frame_coordinates
from .pair import Potential, zero_energy_solution


@dataclass(frozen=True)
class ChiSpec:
    """Smoothstep cutoff rising from 0 at ``T`` to 1 at ``T + w``."""

    T: float
    w: float

    def __post_init__(self):
        if self.T <= 0 or self.w <= 0:
            raise ValueError("chi threshold and width must be positive")

    @classmethod
    def default(cls, L: float) -> "ChiSpec":
        return cls(0.6 * L, 0.1 * L)

    def __call__(self, t):
        s = np.clip((np.asarray(t, dtype=float) - self.T) / self.w, 0.0, 1.0)
        return s**3 * (10 - 15 * s + 6 * s * s)

    def check_grid(self, L: float):
        if self.T + self.w >= L:
            raise ValueError(f"chi transition [{self.T:g}, {self.T + self.w:g}] reaches the grid "
                             f"truncation L = {L:g}")


def type_a_functions(x, y, potential: Potential, chi: ChiSpec, sqrt_lam: complex,
                     zero_solution=None) -> np.ndarray:
    """The pair ``(u_plus, u_minus)`` at frame-``j`` coordinates; shape (n, 2)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    phi0 = zero_solution if zero_solution is not None else zero_energy_solution(potential)
    ay = np.abs(y)
    with np.errstate(divide="ignore", invalid="ignore"):
        base = potential(x) * phi0(x) * np.exp(1j * sqrt_lam * ay) / np.sqrt(ay)
    base = np.where(ay > 0, base, 0.0)
    return np.column_stack([base * chi(y), base * chi(-y)])


@dataclass
class SingularSplit:
    """Factorised rank-two part plus dense remainder."""

    left: np.ndarray = field(repr=False)      # (N, 2) u_plus, u_minus on the grid
    right: np.ndarray = field(repr=False)     # (2, N) coefficient functionals
    remainder: np.ndarray = field(repr=False)  # B_jk
    product: np.ndarray = field(repr=False)   # Gamma_j Gamma_k
    chi: ChiSpec
    E: float
    j: int
    k: int
    fit_rows: np.ndarray = field(repr=False, default=None)
    far_field_residual: float = float("nan")

    @property
    def singular_part(self) -> np.ndarray:
        return self.left @ self.right

    @property
    def rank(self) -> int:
        """Numerical rank of the factorised ``A_jk`` (at most 2 by construction)."""
        if not np.any(self.left) or not np.any(self.right):
            return 0
        s = np.linalg.svd(self.left, compute_uv=False)
        t = np.linalg.svd(self.right, compute_uv=False)
        tol = 1e-12
        return int(min(np.sum(s > tol * max(s[0], 1e-300)), np.sum(t > tol * max(t[0], 1e-300))))

    def reconstruction_error(self) -> float:
        d = self.singular_part + self.remainder - self.product
        return float(np.abs(d).max() / max(np.abs(self.product).max(), 1e-300))


def split_product(gamma_j: GridKernel, gamma_k: GridKernel, j: int, k: int, potential: Potential,
                  chi: ChiSpec = None) -> SingularSplit:
    """Split ``Gamma_j Gamma_k`` into the type-A rank-two part and a remainder."""
    if j == k:
        raise ValueError("split_product needs j != k")
    grid = gamma_j.grid
    if gamma_k.grid != grid or gamma_k.lam != gamma_j.lam:
        raise ValueError("Gamma_j and Gamma_k must share grid and spectral parameter")
    chi = chi if chi is not None else ChiSpec.default(grid.L)
    chi.check_grid(grid.L)
    lam = gamma_j.lam
    P = gamma_j.matrix @ gamma_k.matrix
    fr = frame_coordinates(grid, j)
    U = type_a_functions(fr[:, 0], fr[:, 1], potential, chi, lam.sqrt)
    far = (potential(fr[:, 0]) > 0) & ((chi(fr[:, 1]) + chi(-fr[:, 1])) > 0)
    F = np.flatnonzero(far)
    if F.size < 2:
        raise ValueError("no far-field strip rows beyond the chi threshold")
    C, *_ = np.linalg.lstsq(U[F], P[F], rcond=None)
    A = U @ C
    B = P - A
    resid = float(np.linalg.norm(B[F]) / max(np.linalg.norm(P[F]), 1e-300))
    return SingularSplit(U, C, B, P, chi, lam.E, j, k, F, resid)
