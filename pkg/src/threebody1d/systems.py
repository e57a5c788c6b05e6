"""Resolvent back-ends probed by the limiting-absorption analysis.

Every system exposes ``matrix_elements(lam, phis, psis)`` returning the
array ``[(R(lam) phi_a, psi_b)]`` and ``direct_matrix_elements`` computed by
an independent dense solve of ``(H - lam)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .grid import GridDescriptor, GridKernel, SpectralParameter
from .operators import (MomentumQuadrature, _green_block, free_resolvent, gamma_dense,
                        partial_resolvent, potential_on_grid)
from .pair import Potential
from .schwartz import FullAssembly, assemble_full


def _forms(grid, Rphi, psis):
    """``[(R phi_a, psi_b)]`` from columns ``R phi_a``."""
    return (np.conj(psis) * grid.weights[:, None]).T @ Rphi


@dataclass
class FreeSystem:
    """``H = -Delta`` on the grid."""

    grid: GridDescriptor
    eps_min: float = 1e-6

    def matrix_elements(self, lam: SpectralParameter, phis, psis) -> np.ndarray:
        r0 = free_resolvent(self.grid, lam)
        return _forms(self.grid, r0.matrix @ phis, psis).T

    direct_matrix_elements = matrix_elements


@dataclass
class PartialSystem:
    """``H_i = -Delta + v_i`` with ``R_i`` from the momentum kernel or a dense solve.

    ``method='spectral'`` represents the untruncated strip; its dense-solve
    counterpart continues the strip beyond the box to ``extent``.
    ``method='dense'`` uses the box-truncated potential throughout.
    """

    i: int
    potential: Potential
    grid: GridDescriptor
    method: str = "spectral"
    extent: float = 80.0
    eps_min: float = 1e-4

    def resolvent(self, lam: SpectralParameter) -> GridKernel:
        quad = MomentumQuadrature.build(lam, eps_min=self.eps_min) if self.method == "spectral" else None
        return partial_resolvent(self.i, self.potential, self.grid, lam, method=self.method, quad=quad)

    def matrix_elements(self, lam, phis, psis):
        return _forms(self.grid, self.resolvent(lam).matrix @ phis, psis).T

    def direct_matrix_elements(self, lam, phis, psis):
        if self.method == "dense":
            return _box_direct(self.grid, lam, potential_on_grid(self.potential, self.grid, self.i), phis, psis)
        return _extended_direct(self.i, self.potential, self.grid, lam, self.extent, phis, psis)


def _box_direct(grid, lam, V, phis, psis):
    """``R = R0 (I + V R0)^{-1}`` by one dense solve."""
    r0 = free_resolvent(grid, lam).matrix
    x = np.linalg.solve(np.eye(grid.size) + V[:, None] * r0, phis)
    return _forms(grid, r0 @ x, psis).T


def _extended_direct(i, potential, grid, lam, extent, phis, psis):
    """Dense solve with the strip continued beyond the box (same lattice)."""
    from .geometry import rotate

    h, n = grid.h, grid.n_axis
    m = int(np.ceil((extent + potential.a) / h)) + 1
    ii, jj = np.meshgrid(np.arange(-m, m + n), np.arange(-m, m + n), indexing="ij")
    idx = np.column_stack([ii.ravel(), jj.ravel()])
    fr = rotate(-grid.L + h * (idx + 0.5), 1, i)
    keep = (np.abs(fr[:, 0]) < potential.a) & (np.abs(fr[:, 1]) <= extent)
    idx, fr = idx[keep], fr[keep]
    ve = potential(fr[:, 0])
    idx, ve = idx[ve > 0], ve[ve > 0]
    box = grid.indices
    r0 = free_resolvent(grid, lam).matrix
    # R phi = R0 phi - R0[box, E] V_E X_E with (I + R0[E,E] V_E) X_E = R0[E, box] phi
    rhs = _green_block(idx, box, lam, h) @ phis
    X = np.linalg.solve(np.eye(len(idx)) + _green_block(idx, idx, lam, h) * ve[None, :], rhs)
    Rphi = r0 @ phis - _green_block(box, idx, lam, h) @ (ve[:, None] * X)
    return _forms(grid, Rphi, psis).T


@dataclass
class ThreeBodySystem:
    """``H = -Delta + v_1 + v_2 + v_3`` with box-truncated strips.

    The resolvent is assembled by the alternating Schwartz inversion of the
    three dense single inversions, ``R = R0 (I - Gamma)``.
    """

    potential: Potential
    grid: GridDescriptor
    active: tuple = (1, 2, 3)
    eps_min: float = 1e-4

    def single_inversions(self, lam: SpectralParameter, r0: Optional[GridKernel] = None) -> list:
        r0 = r0 if r0 is not None else free_resolvent(self.grid, lam)
        return [gamma_dense(i, self.potential, self.grid, lam, r0=r0).matrix if i in self.active
                else np.zeros_like(r0.matrix) for i in (1, 2, 3)]

    def assemble(self, lam: SpectralParameter) -> FullAssembly:
        r0 = free_resolvent(self.grid, lam)
        return assemble_full(self.single_inversions(lam, r0), r0.matrix)

    def total_potential(self) -> np.ndarray:
        return sum(potential_on_grid(self.potential, self.grid, i) for i in self.active)

    def matrix_elements(self, lam, phis, psis):
        full = self.assemble(lam)
        return _forms(self.grid, full.apply_resolvent(phis), psis).T

    def remainder_elements(self, lam, phis, psis):
        """``[(R0 N phi_a, psi_b)]`` with ``N = Gamma - sum Gamma_i``."""
        full = self.assemble(lam)
        return _forms(self.grid, full.r0 @ (full.remainder @ phis), psis).T

    def direct_matrix_elements(self, lam, phis, psis):
        return _box_direct(self.grid, lam, self.total_potential(), phis, psis)
