"""Alternating Schwartz inversion of ``I - sum G_i`` from single inversions.

With ``I - Gamma_i = (I - G_i)^{-1}`` the block matrix ``L`` has identities
on the diagonal and ``Gamma_i`` in every off-diagonal slot of block row
``i``.  Solving ``L gamma = diag(Gamma_1, ..., Gamma_n)`` and summing all
blocks gives ``Gamma`` with ``I - Gamma = (I - G)^{-1}``.

Operators are plain 2-D numpy arrays so the same code runs on small random
matrices and on grid kernels.  Summing over block columns first, only the
stacked right-hand side ``[Gamma_1; ...; Gamma_n]`` is ever needed.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import scipy.linalg as sla


class SingularOperatorError(np.linalg.LinAlgError):
    """``I - G_i`` is numerically singular."""

    def __init__(self, index: int, cond: float):
        super().__init__(f"I - G_{index} is singular (condition estimate {cond:.3e})")
        self.index = index
        self.cond = cond


class ConditioningError(np.linalg.LinAlgError):
    """The block matrix ``L`` is too ill-conditioned to invert reliably."""

    def __init__(self, cond: float, threshold: float):
        super().__init__(f"block matrix L is ill-conditioned: condition estimate {cond:.3e} "
                         f"exceeds {threshold:.1e}")
        self.cond = cond


def _cond1(a: np.ndarray) -> float:
    """1-norm condition estimate from an LU factorisation."""
    lu, piv = sla.lu_factor(a, check_finite=False)
    anorm = np.linalg.norm(a, 1)
    rcond = sla.lapack.get_lapack_funcs("gecon", (lu,))(lu, anorm, norm="1")[0]
    return float(np.inf) if rcond == 0 else float(1.0 / rcond)


@dataclass
class OperatorFamily:
    """Operators ``G_i`` with their inversions ``Gamma_i``.

    Parameters
    ----------
    gammas : list of ndarray
        ``Gamma_i``, each square of the same size.
    gs : list of ndarray, optional
        The ``G_i`` themselves when known.
    supports : list of index arrays, optional
        Row supports of the ``Gamma_i`` (rows outside are exactly zero).  When
        given, the block solve is restricted to these rows.
    """

    gammas: list
    gs: Optional[list] = None
    supports: Optional[list] = None
    cond_threshold: float = 1e12

    def __post_init__(self):
        if len(self.gammas) == 0:
            raise ValueError("operator family is empty")
        d = self.gammas[0].shape
        for g in self.gammas:
            if g.shape != d or d[0] != d[1]:
                raise ValueError("all operators must be square with a shared dimension")
        if self.supports is None:
            self.supports = [np.arange(d[0])] * len(self.gammas)

    @classmethod
    def from_g(cls, gs: Sequence[np.ndarray], cond_threshold: float = 1e12) -> "OperatorFamily":
        """Invert each ``I - G_i`` densely; raises on a singular factor."""
        gs = [np.asarray(g, dtype=complex) for g in gs]
        eye = np.eye(gs[0].shape[0])
        gammas = []
        for i, g in enumerate(gs, start=1):
            a = eye - g
            cond = _cond1(a)
            if not np.isfinite(cond) or cond > cond_threshold:
                raise SingularOperatorError(i, cond)
            gammas.append(eye - np.linalg.inv(a))
        return cls(gammas, gs, None, cond_threshold)

    @property
    def n(self) -> int:
        return len(self.gammas)

    @property
    def dim(self) -> int:
        return self.gammas[0].shape[0]

    def block_gamma(self) -> np.ndarray:
        """The block matrix ``L - I`` (dense; for small families)."""
        n, d = self.n, self.dim
        out = np.zeros((n * d, n * d), dtype=complex)
        for i in range(n):
            for j in range(n):
                if i != j:
                    out[i * d:(i + 1) * d, j * d:(j + 1) * d] = self.gammas[i]
        return out

    def schwartz_matrix(self) -> np.ndarray:
        return np.eye(self.n * self.dim) + self.block_gamma()


@dataclass
class SchwartzReport:
    """Diagnostics of one block inversion."""

    cond: float
    block_residuals: list = field(default_factory=list)
    size: int = 0

    @property
    def max_residual(self) -> float:
        return max(self.block_residuals) if self.block_residuals else 0.0


def _reduced_system(family: OperatorFamily):
    """Block system restricted to the row supports.

    Unknowns ``c_i = sum_j gamma_ij`` live on the rows of ``Gamma_i``:
    ``c_i + Gamma_i sum_{l != i} c_l = Gamma_i``.
    """
    sup = family.supports
    offs = np.concatenate([[0], np.cumsum([len(s) for s in sup])])
    m = offs[-1]
    A = np.eye(m, dtype=complex)
    for i in range(family.n):
        gi = family.gammas[i]
        for l in range(family.n):
            if l != i:
                A[offs[i]:offs[i + 1], offs[l]:offs[l + 1]] = gi[np.ix_(sup[i], sup[l])]
    rhs = np.vstack([family.gammas[i][sup[i]] for i in range(family.n)])
    return A, rhs, offs


def schwartz_invert(family: OperatorFamily):
    """Return ``(Gamma, report)`` with ``I - Gamma = (I - sum G_i)^{-1}``.

    Raises
    ------
    ConditioningError
        When the condition estimate of ``L`` exceeds the family threshold.
    """
    if family.n == 1:
        return family.gammas[0].copy(), SchwartzReport(1.0, [0.0], family.dim)
    A, rhs, offs = _reduced_system(family)
    cond = _cond1(A)
    if not np.isfinite(cond) or cond > family.cond_threshold:
        raise ConditioningError(cond, family.cond_threshold)
    c = sla.solve(A, rhs, check_finite=False)
    resid = A @ c - rhs
    scale = max(np.abs(rhs).max(), 1e-300)
    report = SchwartzReport(cond, [float(np.abs(resid[offs[i]:offs[i + 1]]).max(initial=0.0) / scale)
                                   for i in range(family.n)], A.shape[0])
    gamma = np.zeros((family.dim, family.dim), dtype=complex)
    for i, s in enumerate(family.supports):
        gamma[s] += c[offs[i]:offs[i + 1]]
    return gamma, report


def solve_block_system(family: OperatorFamily) -> np.ndarray:
    """Full ``gamma = L^{-1} diag(Gamma_i)`` as an ``(n d, n d)`` array (small families)."""
    n, d = family.n, family.dim
    rhs = np.zeros((n * d, n * d), dtype=complex)
    for i in range(n):
        rhs[i * d:(i + 1) * d, i * d:(i + 1) * d] = family.gammas[i]
    return np.linalg.solve(family.schwartz_matrix(), rhs)


def sum_blocks(gamma_blocks: np.ndarray, n: int) -> np.ndarray:
    d = gamma_blocks.shape[0] // n
    return gamma_blocks.reshape(n, d, n, d).sum(axis=(0, 2))


@dataclass
class NeumannResult:
    """Partial sums of the alternating series and convergence information."""

    partial_sums: list
    block_norm: float
    convergent: bool
    increments: list


def block_norm(family: OperatorFamily) -> float:
    """Spectral norm of the block matrix ``L - I``."""
    if family.n * family.dim <= 3000:
        return float(np.linalg.norm(family.block_gamma(), 2))
    # power iteration on the block operator for large families
    rng = np.random.default_rng(0)
    x = [rng.standard_normal(family.dim) + 0j for _ in range(family.n)]
    est = 0.0
    for _ in range(50):
        y = _apply_block(family, x)
        z = _apply_block_adjoint(family, y)
        nz = np.sqrt(sum(np.vdot(v, v).real for v in z))
        if nz == 0:
            return 0.0
        est = np.sqrt(nz)
        x = [v / nz for v in z]
    return float(est)


def _apply_block(family, x):
    total = sum(x)
    return [family.gammas[i] @ (total - x[i]) for i in range(family.n)]


def _apply_block_adjoint(family, y):
    t = [family.gammas[i].conj().T @ y[i] for i in range(family.n)]
    total = sum(t)
    return [total - t[j] for j in range(family.n)]


def neumann_series(family: OperatorFamily, m: int = 8) -> NeumannResult:
    """Partial sums of ``sum_i Gamma_i - sum_{i!=j} Gamma_i Gamma_j + ...``.

    The order-``d`` term (products of ``d`` factors, no two consecutive
    indices equal) carries the sign ``(-1)^(d+1)``.  Non-convergence
    (``||L - I|| >= 1``) is flagged rather than raised.
    """
    nrm = block_norm(family)
    terms = [g.copy() for g in family.gammas]  # paths of length 1 ending in block row i
    partial = []
    incs = []
    total = np.zeros((family.dim, family.dim), dtype=complex)
    for d in range(1, m + 1):
        inc = sum(terms) * (-1) ** (d + 1)
        total = total + inc
        partial.append(total.copy())
        incs.append(float(np.abs(inc).max()))
        s = sum(terms)
        terms = [family.gammas[i] @ (s - terms[i]) for i in range(family.n)]
    return NeumannResult(partial, nrm, nrm < 1.0, incs)


def order_terms(family: OperatorFamily, d: int) -> np.ndarray:
    """Unsigned sum of all ``d``-fold products with no two consecutive equal indices."""
    import itertools

    out = np.zeros((family.dim, family.dim), dtype=complex)
    for idx in itertools.product(range(family.n), repeat=d):
        if any(a == b for a, b in zip(idx[:-1], idx[1:])):
            continue
        p = np.eye(family.dim, dtype=complex)
        for i in idx:
            p = p @ family.gammas[i]
        out += p
    return out


def gamma_squared_reduction(family: OperatorFamily) -> np.ndarray:
    """Block matrix ``I - (L - I)^2``; block ``(i, j)`` of ``(L - I)^2`` is
    ``Gamma_i sum_{l not in {i, j}} Gamma_l``."""
    n, d = family.n, family.dim
    out = np.eye(n * d, dtype=complex)
    for i in range(n):
        for j in range(n):
            acc = np.zeros((d, d), dtype=complex)
            for l in range(n):
                if l != i and l != j:
                    acc += family.gammas[i] @ family.gammas[l]
            out[i * d:(i + 1) * d, j * d:(j + 1) * d] -= acc
    return out


def invert_via_reduction(family: OperatorFamily) -> np.ndarray:
    """``Gamma`` through ``(I + B)^{-1} = (I - B^2)^{-1} (I - B)`` with ``B = L - I``."""
    n, d = family.n, family.dim
    rhs = np.zeros((n * d, n * d), dtype=complex)
    for i in range(n):
        rhs[i * d:(i + 1) * d, i * d:(i + 1) * d] = family.gammas[i]
    B = family.block_gamma()
    gam = np.linalg.solve(gamma_squared_reduction(family), rhs - B @ rhs)
    return sum_blocks(gam, n)


@dataclass
class FullAssembly:
    """Output of :func:`assemble_full`."""

    gamma: np.ndarray
    remainder: np.ndarray
    r0: np.ndarray
    report: SchwartzReport

    def apply_resolvent(self, f) -> np.ndarray:
        """``R f = R0 (I - Gamma) f``."""
        f = np.asarray(f)
        return self.r0 @ (f - self.gamma @ f)

    def resolvent_matrix(self) -> np.ndarray:
        return self.r0 - self.r0 @ self.gamma


def assemble_full(gammas: Sequence[np.ndarray], r0: np.ndarray, supports=None,
                  cond_threshold: float = 1e12) -> FullAssembly:
    """Combine single inversions into ``Gamma``, ``N = Gamma - sum Gamma_i`` and ``R``."""
    gammas = [np.asarray(g) for g in gammas]
    if supports is None:
        supports = [np.flatnonzero(np.any(g != 0, axis=1)) for g in gammas]
    active = [k for k, s in enumerate(supports) if len(s) > 0]
    dim = r0.shape[0]
    if not active:
        z = np.zeros((dim, dim), dtype=complex)
        return FullAssembly(z, z.copy(), r0, SchwartzReport(1.0, [], 0))
    fam = OperatorFamily([gammas[k] for k in active], supports=[supports[k] for k in active],
                         cond_threshold=cond_threshold)
    gamma, report = schwartz_invert(fam)
    remainder = gamma - sum(gammas)
    return FullAssembly(gamma, remainder, r0, report)
