"""Grid descriptors, spectral parameters and dense grid kernels."""
from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

PRESETS = {
    "desk": (8.0, 0.5),
    "default": (15.0, 0.25),
    "large": (30.0, 0.25),
}

SNAPSHOT_VERSION = 1.0
_HEADER_LEN = 8


@dataclass(frozen=True)
class GridDescriptor:
    """Cell-centred uniform grid on the square ``[-L, L]^2`` (frame-1 coordinates).

    Nodes sit at ``-L + h/2 + m h``; every node carries the weight ``h^2``,
    so the weights sum to ``(2L)^2``.
    """

    L: float
    h: float

    def __post_init__(self):
        if self.L <= 0 or self.h <= 0:
            raise ValueError("L and h must be positive")
        n = 2 * self.L / self.h
        if abs(n - round(n)) > 1e-9:
            raise ValueError("2L/h must be an integer")

    @classmethod
    def preset(cls, name: str) -> "GridDescriptor":
        if name not in PRESETS:
            raise ValueError(f"unknown grid preset {name!r}; choose from {sorted(PRESETS)}")
        return cls(*PRESETS[name])

    @property
    def n_axis(self) -> int:
        return int(round(2 * self.L / self.h))

    @property
    def size(self) -> int:
        return self.n_axis**2

    @property
    def axis(self) -> np.ndarray:
        return -self.L + self.h * (np.arange(self.n_axis) + 0.5)

    @property
    def nodes(self) -> np.ndarray:
        """Node coordinates, shape (N, 2), x-major ordering."""
        X, Y = np.meshgrid(self.axis, self.axis, indexing="ij")
        return np.column_stack([X.ravel(), Y.ravel()])

    @property
    def indices(self) -> np.ndarray:
        """Integer lattice indices ``(ix, iy)`` of the nodes, shape (N, 2)."""
        I, J = np.meshgrid(np.arange(self.n_axis), np.arange(self.n_axis), indexing="ij")
        return np.column_stack([I.ravel(), J.ravel()])

    @property
    def weights(self) -> np.ndarray:
        return np.full(self.size, self.h * self.h)

    def reshape(self, values) -> np.ndarray:
        return np.asarray(values).reshape(self.n_axis, self.n_axis)


@dataclass(frozen=True)
class SpectralParameter:
    """``lambda = E + i eps`` with the branch ``Im sqrt(lambda) >= 0``.

    ``eps = 0`` is only accepted with ``limit=True`` (boundary-value kernels).
    """

    E: float
    eps: float
    limit: bool = False

    def __post_init__(self):
        if not self.E > 0:
            raise ValueError(f"E = {self.E} is outside the admissible box (E must be positive)")
        if self.eps < 0:
            raise ValueError("eps must be non-negative")
        if self.eps == 0 and not self.limit:
            raise ValueError("eps = 0 requires the explicit limit-kernel flag")

    @property
    def value(self) -> complex:
        return complex(self.E, self.eps)

    @property
    def sqrt(self) -> complex:
        s = np.sqrt(self.value)
        return s if s.imag >= 0 else -s

    def in_box(self, c1: float, c2: float) -> bool:
        return c1 <= self.E <= c2


@dataclass(frozen=True)
class GridKernel:
    """Dense discretised operator acting on nodal values.

    ``matrix`` already contains the quadrature weights, so the discrete
    operator is ``(K f)_m = sum_n matrix[m, n] f_n`` and composition is a
    plain matrix product.
    """

    matrix: np.ndarray = field(repr=False)
    grid: GridDescriptor
    label: str
    lam: SpectralParameter

    def __post_init__(self):
        m = self.matrix
        if m.ndim != 2 or m.shape != (self.grid.size, self.grid.size):
            raise ValueError(f"matrix shape {m.shape} does not match grid size {self.grid.size}")

    @classmethod
    def identity(cls, grid: GridDescriptor, lam: SpectralParameter) -> "GridKernel":
        return cls(np.eye(grid.size, dtype=complex), grid, "I", lam)

    @classmethod
    def zero(cls, grid: GridDescriptor, lam: SpectralParameter, label: str = "0") -> "GridKernel":
        return cls(np.zeros((grid.size, grid.size), dtype=complex), grid, label, lam)

    def apply(self, f) -> np.ndarray:
        return self.matrix @ np.asarray(f)

    def form(self, phi, psi) -> complex:
        """Matrix element ``(K phi, psi) = sum_m w_m (K phi)_m conj(psi_m)``."""
        return complex(np.sum(self.grid.weights * self.apply(phi) * np.conj(psi)))

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.matrix)))

    def __add__(self, other: "GridKernel") -> "GridKernel":
        _check_compatible(self, other)
        return GridKernel(self.matrix + other.matrix, self.grid, f"({self.label}+{other.label})", self.lam)

    def __sub__(self, other: "GridKernel") -> "GridKernel":
        _check_compatible(self, other)
        return GridKernel(self.matrix - other.matrix, self.grid, f"({self.label}-{other.label})", self.lam)


def _check_compatible(a: GridKernel, b: GridKernel):
    if a.grid != b.grid:
        raise ValueError(f"grid mismatch: {a.grid} vs {b.grid}")
    if a.lam != b.lam:
        raise ValueError(f"spectral parameter mismatch: {a.lam} vs {b.lam}")


def compose(a: GridKernel, b: GridKernel) -> GridKernel:
    """Operator product ``a b`` (weights are already inside the matrices)."""
    _check_compatible(a, b)
    return GridKernel(a.matrix @ b.matrix, a.grid, f"{a.label}*{b.label}", a.lam)


# ---------------------------------------------------------------------------
# snapshots
# ---------------------------------------------------------------------------

def write_snapshot(kernel: GridKernel, path) -> str:
    """Write a flat binary snapshot and return its SHA-256 digest.

    Header: eight little-endian doubles ``(version, L, h, n_axis, E, eps,
    rows, cols)``.  Payload: row-major interleaved real/imaginary doubles.
    """
    m = np.ascontiguousarray(kernel.matrix, dtype="<c16")
    g, lam = kernel.grid, kernel.lam
    header = struct.pack("<8d", SNAPSHOT_VERSION, g.L, g.h, g.n_axis, lam.E, lam.eps, *m.shape)
    path = Path(path)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(m.view("<f8").tobytes())
    return file_digest(path)


def read_snapshot(path, label: str = "snapshot") -> GridKernel:
    raw = Path(path).read_bytes()
    if len(raw) < 8 * _HEADER_LEN:
        raise ValueError(f"{path}: truncated snapshot header")
    version, L, h, n_axis, E, eps, rows, cols = struct.unpack("<8d", raw[: 8 * _HEADER_LEN])
    if version != SNAPSHOT_VERSION:
        raise ValueError(f"{path}: snapshot version {version} does not match {SNAPSHOT_VERSION}")
    rows, cols = int(rows), int(cols)
    payload = np.frombuffer(raw[8 * _HEADER_LEN:], dtype="<f8")
    if payload.size != 2 * rows * cols:
        raise ValueError(f"{path}: payload size does not match header")
    m = payload.view("<c16").reshape(rows, cols).astype(complex)
    grid = GridDescriptor(L, h)
    lam = SpectralParameter(E, eps, limit=(eps == 0))
    return GridKernel(m, grid, label, lam)


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()
