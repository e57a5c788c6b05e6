"""Discretised resolvent-type operators on the truncated plane.

Sign convention: with ``H = -Delta + V`` the second resolvent identity reads
``R = R0 (I + V R0)^{-1}``.  Writing ``R = R0 (I - G)^{-1}`` therefore forces
``G_i = -v_i R0``, and then ``Gamma_i = I - (I - G_i)^{-1} = +v_i R_i``, which
is the spectral kernel with a positive ``v(x_i)`` prefactor.

Normalisation: the spectral kernel uses plane-wave normalised eigenfunctions
``phi(x, k)`` (coefficient one on the incoming wave) with measure
``dk dp / (2 pi)^2``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import special

from .geometry import rotate
from .grid import GridDescriptor, GridKernel, SpectralParameter
from .pair import Potential, eigenfunctions_batch

# lattice constants for the corrected diagonal of the log-singular kernel:
# ZETA_C = Z'(0)/2 and A4 = -Z'(-1)/8 for the square-lattice Epstein zeta
# Z(s) = sum' |m|^{-2s}; with them the rule is accurate to O(h^6 log h).
ZETA_C = -1.3105329259115093
A4 = 0.024296742002568233


class QuadratureError(ValueError):
    """Raised when the momentum quadrature cannot resolve the pole."""


# ---------------------------------------------------------------------------
# free resolvent
# ---------------------------------------------------------------------------

def lattice_green(di, dj, lam: SpectralParameter, h: float) -> np.ndarray:
    """Weighted free-resolvent entries for integer lattice offsets ``(di, dj)``.

    Off-diagonal entries are ``h^2 (i/4) H0(sqrt(lam) r)``.  The zero offset
    and its four axial neighbours carry the lattice correction that replaces
    the logarithmic singularity.
    """
    di, dj = np.broadcast_arrays(np.abs(np.asarray(di, dtype=np.int64)),
                                 np.abs(np.asarray(dj, dtype=np.int64)))
    lo, hi = np.minimum(di, dj), np.maximum(di, dj)
    base = int(hi.max(initial=0)) + 1
    ukey, inv = np.unique(hi * base + lo, return_inverse=True)
    uhi, ulo = ukey // base, ukey % base
    r = h * np.hypot(uhi, ulo)
    kap = lam.sqrt
    vals = np.empty(ukey.shape, dtype=complex)
    nz = r > 0
    vals[nz] = h * h * 0.25j * special.hankel1(0, kap * r[nz])
    s0 = 0.25j - (np.log(kap / 2) + np.euler_gamma) / (2 * np.pi)
    d0 = s0 - (np.log(h) + ZETA_C) / (2 * np.pi)
    c = A4 * h * h / (2 * np.pi)
    vals[~nz] = h * h * d0 - c * (4 + h * h * lam.value)
    vals[(uhi == 1) & (ulo == 0)] += c
    return vals[inv].reshape(di.shape)


def _green_block(idx_rows, idx_cols, lam, h):
    di = idx_rows[:, None, 0] - idx_cols[None, :, 0]
    dj = idx_rows[:, None, 1] - idx_cols[None, :, 1]
    return lattice_green(di, dj, lam, h)


def free_resolvent_block(grid: GridDescriptor, lam: SpectralParameter, rows=None, cols=None) -> np.ndarray:
    """Block ``R0[rows, cols]`` of the weighted free-resolvent matrix."""
    n = grid.n_axis
    idx = grid.indices
    rows = np.arange(grid.size) if rows is None else np.asarray(rows)
    cols = np.arange(grid.size) if cols is None else np.asarray(cols)
    off = np.arange(-(n - 1), n)
    table = lattice_green(off[:, None], off[None, :], lam, grid.h)
    ir, ic = idx[rows], idx[cols]
    return table[ir[:, None, 0] - ic[None, :, 0] + n - 1, ir[:, None, 1] - ic[None, :, 1] + n - 1]


def free_resolvent(grid: GridDescriptor, lam: SpectralParameter, max_nodes: int = 6000) -> GridKernel:
    """Nyström matrix of the outgoing free resolvent ``(-Delta - lam)^{-1}``."""
    if grid.size > max_nodes:
        raise MemoryError(f"dense R0 with {grid.size} nodes exceeds max_nodes={max_nodes}; "
                          "use free_resolvent_block")
    return GridKernel(free_resolvent_block(grid, lam), grid, "R0", lam)


# ---------------------------------------------------------------------------
# potentials on the grid
# ---------------------------------------------------------------------------

def frame_coordinates(grid: GridDescriptor, i: int) -> np.ndarray:
    """Node coordinates ``(x_i, y_i)`` in frame ``i``."""
    return rotate(grid.nodes, 1, i)


def potential_on_grid(potential: Potential, grid: GridDescriptor, i: int) -> np.ndarray:
    return potential(frame_coordinates(grid, i)[:, 0])


def strip_nodes(potential: Potential, grid: GridDescriptor, i: int) -> np.ndarray:
    return np.flatnonzero(potential_on_grid(potential, grid, i) > 0)


def g_operator(i: int, potential: Potential, grid: GridDescriptor, lam: SpectralParameter,
               r0: Optional[GridKernel] = None) -> GridKernel:
    """``G_i = -diag(v_i) R0`` (see the module docstring for the sign)."""
    v = potential_on_grid(potential, grid, i)
    if r0 is None:
        r0 = free_resolvent(grid, lam)
    return GridKernel(-v[:, None] * r0.matrix, grid, f"G{i}", lam)


# ---------------------------------------------------------------------------
# single inversions by dense solves
# ---------------------------------------------------------------------------

def gamma_dense(i: int, potential: Potential, grid: GridDescriptor, lam: SpectralParameter,
                r0: Optional[GridKernel] = None) -> GridKernel:
    """``Gamma_i = I - (I - G_i)^{-1}`` for the potential truncated to the box.

    Only the strip rows are non-zero, so the solve is restricted to them:
    ``R_i[S, :] = (I + R0[S, S] V_S)^{-1} R0[S, :]`` and ``Gamma_i = V R_i``.
    """
    v = potential_on_grid(potential, grid, i)
    S = np.flatnonzero(v > 0)
    out = np.zeros((grid.size, grid.size), dtype=complex)
    if S.size:
        r0s = r0.matrix[S] if r0 is not None else free_resolvent_block(grid, lam, rows=S)
        M = np.eye(S.size) + r0s[:, S] * v[S][None, :]
        out[S] = v[S][:, None] * np.linalg.solve(M, r0s)
    return GridKernel(out, grid, f"Gamma{i}", lam)


def gamma_strip_extended(i: int, potential: Potential, grid: GridDescriptor, lam: SpectralParameter,
                         extent: float = 80.0) -> GridKernel:
    """``Gamma_i`` with the strip continued beyond the box to ``|y_i| <= extent``.

    The unknowns live on every lattice node of the infinite grid inside the
    strip up to the given extent, which removes the box truncation of the
    potential while keeping the same Nyström rule.
    """
    h, n = grid.h, grid.n_axis
    v_box = potential_on_grid(potential, grid, i)
    S = np.flatnonzero(v_box > 0)
    out = np.zeros((grid.size, grid.size), dtype=complex)
    if S.size == 0:
        return GridKernel(out, grid, f"Gamma{i}", lam)
    m = int(np.ceil((extent + potential.a) / h)) + 1
    ii, jj = np.meshgrid(np.arange(-m, m + n), np.arange(-m, m + n), indexing="ij")
    idx = np.column_stack([ii.ravel(), jj.ravel()])
    pts = -grid.L + h * (idx + 0.5)
    fr = rotate(pts, 1, i)
    keep = (np.abs(fr[:, 0]) < potential.a) & (np.abs(fr[:, 1]) <= extent)
    idx, fr = idx[keep], fr[keep]
    ve = potential(fr[:, 0])
    sel = ve > 0
    idx, ve = idx[sel], ve[sel]
    box_idx = grid.indices
    A = np.eye(len(idx)) + _green_block(idx, idx, lam, h) * ve[None, :]
    X = np.linalg.solve(A, _green_block(idx, box_idx, lam, h))
    lookup = {(int(a), int(b)): p for p, (a, b) in enumerate(idx)}
    pos = np.array([lookup[(int(a), int(b))] for a, b in box_idx[S]])
    out[S] = ve[pos][:, None] * X[pos]
    return GridKernel(out, grid, f"Gamma{i}", lam)


# ---------------------------------------------------------------------------
# spectral (momentum-integral) construction
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MomentumQuadrature:
    """Gauss-Legendre panels on ``[0, K]`` graded geometrically toward ``sqrt(E)``.

    The ``p`` integral of the kernel is done in closed form, leaving a 1-D
    integral over ``k``; the grading starts at ``eps / (4 sqrt(E))`` so the
    near-pole region is resolved for every supported ``eps``.
    """

    nodes: np.ndarray
    weights: np.ndarray
    cutoff: float
    eps_min: float

    @classmethod
    def build(cls, lam: SpectralParameter, cutoff: float = 120.0, order: int = 12,
              panel: float = 0.5, eps_min: float = 1e-4) -> "MomentumQuadrature":
        if lam.eps < eps_min:
            raise QuadratureError(f"eps = {lam.eps:g} is below the minimum supported eps = {eps_min:g} "
                                  f"of the momentum quadrature")
        s = np.sqrt(lam.E)
        pts = {0.0, cutoff, s}
        d = lam.eps / (4 * s)
        while d < 2 * s:
            pts.add(s + d)
            if d < s:
                pts.add(s - d)
            d *= 2
        pts.update(np.arange(0.0, cutoff + 1e-9, panel).tolist())
        br = np.array(sorted(p for p in pts if 0 <= p <= cutoff))
        xg, wg = np.polynomial.legendre.leggauss(order)
        a0, b0 = br[:-1], br[1:]
        k = (0.5 * (b0 - a0)[:, None] * xg + 0.5 * (a0 + b0)[:, None]).ravel()
        w = (0.5 * (b0 - a0)[:, None] * wg).ravel()
        return cls(k, w, float(cutoff), float(eps_min))


def _kappa(lam, k):
    kap = np.sqrt(lam.value - k * k + 0j)
    return np.where(kap.imag < 0, -kap, kap)


def _expint2(z):
    return np.exp(-z) - z * special.exp1(z)


def _tail(potential, x, xp, ady, cutoff):
    """First-order large-|k| contribution beyond the cutoff (both signs of k)."""
    dP = potential.antiderivative(x) - potential.antiderivative(xp)
    c = ady - 1j * (x - xp)
    c = np.where(np.abs(c) < 1e-300, 1e-300, c)
    return -1j * dP * (_expint2(c * cutoff) / cutoff).imag


def scattered_kernel_lattice(potential: Potential, xs, xps, dys, lam: SpectralParameter,
                             quad: MomentumQuadrature, n_slices: int = 800,
                             chunk: int = 512) -> np.ndarray:
    """Unweighted kernel ``R_1 - R0`` on a product set.

    Returns an array of shape ``(len(xs), len(xps), len(dys))`` with entries
    ``(i / 4 pi) int dk [phi(x,k) conj(phi(x',k)) - exp(ik(x-x'))] exp(i kappa |dy|) / kappa``.
    """
    xs, xps, dys = (np.asarray(a, dtype=float) for a in (xs, xps, dys))
    nx, npx, nd = len(xs), len(xps), len(dys)
    out = np.zeros((nx * npx, nd), dtype=complex)
    ady = np.abs(dys)
    dx = (xs[:, None] - xps[None, :]).ravel()
    for sgn in (1.0, -1.0):
        for lo in range(0, quad.nodes.size, chunk):
            k = quad.nodes[lo:lo + chunk]
            w = quad.weights[lo:lo + chunk]
            ph = eigenfunctions_batch(potential, np.concatenate([xs, xps]), sgn * k, n_slices)
            px, pp = ph[:, :nx], ph[:, nx:]
            D = (px[:, :, None] * np.conj(pp)[:, None, :]).reshape(len(k), -1)
            D -= np.exp(1j * sgn * k[:, None] * dx[None, :])
            kap = _kappa(lam, k)
            g = w[:, None] * np.exp(1j * kap[:, None] * ady[None, :]) / kap[:, None]
            out += D.T @ g
    out += _tail(potential, xs[:, None, None], xps[None, :, None], ady[None, None, :],
                 quad.cutoff).reshape(nx * npx, nd)
    return (1j / (4 * np.pi)) * out.reshape(nx, npx, nd)


def scattered_kernel_pairs(potential: Potential, x_rows, y_rows, x_cols, y_cols, lam: SpectralParameter,
                           quad: MomentumQuadrature, n_slices: int = 800, chunk: int = 256) -> np.ndarray:
    """Unweighted ``R_i - R0`` for arbitrary point sets given in frame ``i``."""
    x_rows, y_rows, x_cols, y_cols = (np.asarray(a, dtype=float) for a in (x_rows, y_rows, x_cols, y_cols))
    ux, inv = np.unique(np.concatenate([x_rows, x_cols]), return_inverse=True)
    ir, ic = inv[: x_rows.size], inv[x_rows.size:]
    out = np.zeros((x_rows.size, x_cols.size), dtype=complex)
    ady = np.abs(y_rows[:, None] - y_cols[None, :])
    dx = x_rows[:, None] - x_cols[None, :]
    for sgn in (1.0, -1.0):
        for lo in range(0, quad.nodes.size, chunk):
            k = quad.nodes[lo:lo + chunk]
            w = quad.weights[lo:lo + chunk]
            ph = eigenfunctions_batch(potential, ux, sgn * k, n_slices)
            kap = _kappa(lam, k)
            a_r = ph[:, ir] * w[:, None]
            b_c = np.conj(ph[:, ic])
            for r in range(x_rows.size):
                D = a_r[:, r, None] * b_c - w[:, None] * np.exp(1j * sgn * k[:, None] * dx[r][None, :])
                out[r] += np.sum(D * np.exp(1j * kap[:, None] * ady[r][None, :]) / kap[:, None], axis=0)
    out += _tail(potential, x_rows[:, None], x_cols[None, :], ady, quad.cutoff)
    return (1j / (4 * np.pi)) * out


def _scattered_weighted(i, potential, grid, lam, quad, rows, n_slices):
    """Weighted ``(R_i - R0)[rows, :]`` on the grid."""
    h = grid.h
    if i == 1:
        idx = grid.indices
        xs_all = grid.axis
        row_ix = idx[rows, 0]
        uix = np.unique(row_ix)
        off = np.arange(-(grid.n_axis - 1), grid.n_axis)
        sc = scattered_kernel_lattice(potential, xs_all[uix], xs_all, off * h, lam, quad, n_slices)
        pos = np.searchsorted(uix, row_ix)
        block = sc[pos[:, None], idx[None, :, 0], (idx[rows, 1][:, None] - idx[None, :, 1]) + grid.n_axis - 1]
        return h * h * block
    fr = frame_coordinates(grid, i)
    return h * h * scattered_kernel_pairs(potential, fr[rows, 0], fr[rows, 1], fr[:, 0], fr[:, 1],
                                          lam, quad, n_slices)


def gamma_single(i: int, potential: Potential, grid: GridDescriptor, lam: SpectralParameter,
                 quad: Optional[MomentumQuadrature] = None, r0: Optional[GridKernel] = None,
                 n_slices: int = 800) -> GridKernel:
    """``Gamma_i = v(x_i) R_i`` from the momentum-space kernel of ``R_i``.

    The strip potential is the full (untruncated) one, so this agrees with
    the dense solve once the strip is long enough (see
    :func:`gamma_strip_extended`).
    """
    v = potential_on_grid(potential, grid, i)
    S = np.flatnonzero(v > 0)
    out = np.zeros((grid.size, grid.size), dtype=complex)
    if S.size == 0:
        return GridKernel(out, grid, f"Gamma{i}", lam)
    if quad is None:
        quad = MomentumQuadrature.build(lam)
    r0s = r0.matrix[S] if r0 is not None else free_resolvent_block(grid, lam, rows=S)
    out[S] = v[S][:, None] * (r0s + _scattered_weighted(i, potential, grid, lam, quad, S, n_slices))
    return GridKernel(out, grid, f"Gamma{i}", lam)


def partial_resolvent(i: int, potential: Potential, grid: GridDescriptor, lam: SpectralParameter,
                      method: str = "spectral", quad: Optional[MomentumQuadrature] = None,
                      r0: Optional[GridKernel] = None, n_slices: int = 800) -> GridKernel:
    """``R_i = (H_i - lam)^{-1}`` on the grid.

    ``method='spectral'`` evaluates ``R0 + (R_i - R0)`` from the momentum
    kernel; ``method='dense'`` forms ``R0 (I - Gamma_i)`` with the
    box-truncated dense inversion.
    """
    if r0 is None:
        r0 = free_resolvent(grid, lam)
    if potential.is_zero:
        return GridKernel(r0.matrix.copy(), grid, f"R{i}", lam)
    if method == "dense":
        gam = gamma_dense(i, potential, grid, lam, r0=r0)
        S = np.flatnonzero(np.any(gam.matrix != 0, axis=1))
        m = r0.matrix - r0.matrix[:, S] @ gam.matrix[S]
        return GridKernel(m, grid, f"R{i}", lam)
    if method != "spectral":
        raise ValueError(f"unknown method {method!r}")
    if quad is None:
        quad = MomentumQuadrature.build(lam)
    rows = np.arange(grid.size)
    m = r0.matrix + _scattered_weighted(i, potential, grid, lam, quad, rows, n_slices)
    return GridKernel(m, grid, f"R{i}", lam)


# ---------------------------------------------------------------------------
# finite differences and test functions
# ---------------------------------------------------------------------------

_STENCILS = {
    2: np.array([1.0, -2.0, 1.0]),
    4: np.array([-1 / 12, 4 / 3, -5 / 2, 4 / 3, -1 / 12]),
    6: np.array([1 / 90, -3 / 20, 3 / 2, -49 / 18, 3 / 2, -3 / 20, 1 / 90]),
    8: np.array([-1 / 560, 8 / 315, -1 / 5, 8 / 5, -205 / 72, 8 / 5, -1 / 5, 8 / 315, -1 / 560]),
}


def fd_laplacian(values, h: float, order: int = 8) -> np.ndarray:
    """Central-difference Laplacian of a 2-D array on its interior.

    Returns an array shrunk by ``order // 2`` nodes on every side.
    """
    c = _STENCILS[order]
    m = order // 2
    u = np.asarray(values)
    nx, ny = u.shape
    out = np.zeros((nx - 2 * m, ny - 2 * m), dtype=u.dtype)
    for s, cs in enumerate(c):
        d = s - m
        out = out + cs * (u[m + d: nx - m + d, m:ny - m] + u[m:nx - m, m + d: ny - m + d])
    return out / (h * h)


def helmholtz_residual(grid: GridDescriptor, u, f, lam: SpectralParameter, V=None,
                       order: int = 8) -> np.ndarray:
    """``(-Delta_h + V - lam) u - f`` on interior nodes (margin ``order // 2``)."""
    m = order // 2
    U = grid.reshape(u)
    F = grid.reshape(f)[m:-m, m:-m]
    res = -fd_laplacian(U, grid.h, order) - lam.value * U[m:-m, m:-m] - F
    if V is not None:
        res = res + grid.reshape(V)[m:-m, m:-m] * U[m:-m, m:-m]
    return res


def smooth_bump(t) -> np.ndarray:
    """Compactly supported C-infinity bump ``exp(1 - 1/(1 - t^2))`` on ``|t| < 1``."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    m = np.abs(t) < 1
    out[m] = np.exp(1.0 - 1.0 / (1.0 - t[m] ** 2))
    return out


def bump_product(points, center=(0.0, 0.0), width=(3.0, 3.0)) -> np.ndarray:
    """Product of smooth bumps in ``x`` and ``y`` (frame-1 coordinates)."""
    p = np.atleast_2d(np.asarray(points, dtype=float))
    w = np.broadcast_to(np.asarray(width, dtype=float), (2,))
    return smooth_bump((p[:, 0] - center[0]) / w[0]) * smooth_bump((p[:, 1] - center[1]) / w[1])
