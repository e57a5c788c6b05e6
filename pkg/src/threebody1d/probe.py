"""Limiting-absorption probe: matrix elements of ``R(E + i eps)`` as ``eps -> 0``.

The weak limit is proxied by a finite battery of smooth, compactly
supported test functions.  A sequence is accepted as Cauchy when the ratio of
successive differences stays below a threshold over the final steps; the
limit is estimated by Richardson extrapolation assuming a leading linear
term in ``eps``.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .grid import GridDescriptor, SpectralParameter
from .holder import HolderParams, classify_trend, dyadic_offsets, holder_norm
from .operators import bump_product

DEFAULT_BATTERY_CENTRES = ((0.0, 0.0), (1.5, 0.0), (-1.5, 0.0), (0.0, 1.5),
                           (0.0, -1.5), (1.0, 1.0), (-1.0, -1.0), (2.0, -1.0))


def default_eps_sequence(start: float = 0.4, count: int = 7, floor: float = 0.0) -> np.ndarray:
    """``eps_m = start * 2^-m`` for ``m < count``, dropping values below ``floor``."""
    eps = start * 0.5 ** np.arange(count)
    return eps[eps >= floor]


def test_battery(grid: GridDescriptor, centres=DEFAULT_BATTERY_CENTRES, width: float = 2.5) -> np.ndarray:
    """Smooth bump products sampled on the grid; shape (N, len(centres))."""
    return np.column_stack([bump_product(grid.nodes, c, (width, width)) for c in centres])


def test_function_regularity(values, grid: GridDescriptor, mu: float = 0.25, theta: float = 0.25,
                             pads=(2, 4), tol: float = 0.05) -> tuple:
    """Hölder-norm trend of the Fourier image of a gridded test function.

    The discrete transform is refined by zero padding; returns
    ``(status, values)`` with status from :func:`classify_trend`.
    """
    f = grid.reshape(values)
    vals = []
    for pad in pads:
        n = pad * grid.n_axis
        F = np.fft.fftshift(np.fft.fft2(f, (n, n))) * grid.h**2
        d = 2 * np.pi / (n * grid.h)
        origin = -d * (n // 2)
        params = HolderParams(mu, theta, dyadic_offsets(8 * 2 * np.pi / (grid.n_axis * grid.h), d))
        vals.append(holder_norm(np.abs(F), d, params, origin=(origin, origin)))
    status, _, _ = classify_trend(vals, [1.0 / p for p in pads], tol)
    return status, vals


@dataclass
class LimitProbe:
    """Matrix-element sequence and its convergence diagnostics.

    ``values`` has shape ``(len(eps),) + element_shape``.
    """

    E: float
    eps: np.ndarray
    values: np.ndarray = field(repr=False)
    ratios: np.ndarray = field(repr=False)
    richardson: np.ndarray = field(repr=False)
    limit: np.ndarray = field(repr=False)
    max_ratio: float
    spread: float
    status: str  # pass | inconclusive
    threshold: float = 0.7
    steps: int = 3
    note: str = "weak limit proxied by matrix elements against a fixed test battery"

    def records(self):
        """Flat rows ``(E, eps, index, re, im)`` for CSV export."""
        rows = []
        flat = self.values.reshape(len(self.eps), -1)
        for m, e in enumerate(self.eps):
            for j, v in enumerate(flat[m]):
                rows.append((self.E, float(e), j, float(v.real), float(v.imag)))
        return rows


def analyse_sequence(E: float, eps, values, threshold: float = 0.7, steps: int = 3,
                     eps_floor_reached: bool = True) -> LimitProbe:
    """Cauchy-ratio and Richardson analysis of a precomputed sequence."""
    eps = np.asarray(eps, dtype=float)
    values = np.asarray(values, dtype=complex)
    if len(eps) < steps + 2:
        raise ValueError(f"need at least {steps + 2} eps values for a {steps}-step Cauchy test")
    if np.any(np.diff(eps) >= 0):
        raise ValueError("eps sequence must be strictly decreasing")
    if not np.all(np.isfinite(values)):
        raise FloatingPointError("non-finite matrix elements in probe sequence")
    diffs = np.abs(np.diff(values, axis=0))
    scale = np.max(np.abs(values), axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = diffs[1:] / diffs[:-1]
    # differences at round-off level count as converged
    tiny = diffs[:-1] <= 1e-13 * np.maximum(scale, 1e-300)
    ratios = np.where(tiny, 0.0, ratios)
    # Richardson for a leading linear eps term on a pair (e0 > e1)
    rich = []
    for m in range(1, len(eps)):
        e0, e1 = eps[m - 1], eps[m]
        rich.append((e0 * values[m] - e1 * values[m - 1]) / (e0 - e1))
    rich = np.asarray(rich)
    last, prev = rich[-1], rich[-2]
    denom = np.maximum(np.abs(last), 1e-300)
    spread_arr = np.where(np.abs(last) < 1e-14, 0.0, np.abs(last - prev) / denom)
    max_ratio = float(np.max(ratios[-steps:])) if ratios.size else 0.0
    ok = max_ratio < threshold
    status = "pass" if ok else "inconclusive"
    return LimitProbe(E, eps, values, ratios, rich, last, max_ratio, float(np.max(spread_arr)), status,
                      threshold, steps)


def limiting_absorption_probe(system, E: float, eps_seq: Sequence[float], phis, psis,
                              threads: int = 1, threshold: float = 0.7, steps: int = 3,
                              evaluate: Optional[Callable] = None, regularity_check: bool = False,
                              mu: float = 0.25, theta: float = 0.25) -> LimitProbe:
    """Probe ``(R(E + i eps) phi, psi)`` along a decreasing ``eps`` sequence.

    Parameters
    ----------
    system
        Object with ``matrix_elements(lam, phis, psis)`` and ``eps_min``.
    eps_seq : sequence of float
        Decreasing absorption values; entries below ``system.eps_min`` are
        dropped, which can leave the probe inconclusive.
    phis, psis : ndarray, shape (N,) or (N, m)
    threads : int
        Independent ``eps`` values are evaluated concurrently.
    evaluate : callable, optional
        Alternative ``(lam, phis, psis) -> array`` (e.g. remainder elements).
    """
    phis = np.asarray(phis)
    psis = np.asarray(psis)
    if phis.ndim == 1:
        phis = phis[:, None]
    if psis.ndim == 1:
        psis = psis[:, None]
    grid = getattr(system, "grid", None)
    if regularity_check and grid is not None:
        for col in np.hstack([phis, psis]).T:
            status, _ = test_function_regularity(col, grid, mu, theta)
            if status != "finite":
                raise ValueError("test function Fourier image failed the Hölder regularity check")
    eps_min = getattr(system, "eps_min", 0.0)
    eps = np.asarray([e for e in eps_seq if e >= eps_min], dtype=float)
    floored = len(eps) < len(eps_seq)
    fn = evaluate if evaluate is not None else system.matrix_elements

    def one(e):
        return fn(SpectralParameter(E, float(e)), phis, psis)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            vals = list(pool.map(one, eps))
    else:
        vals = [one(e) for e in eps]
    if len(eps) < steps + 2:
        values = np.asarray(vals) if vals else np.zeros((0,) + (phis.shape[1], psis.shape[1]))
        return LimitProbe(E, eps, values, np.zeros(0), np.zeros(0), np.full(values.shape[1:], np.nan),
                          float("nan"), float("nan"), "inconclusive", threshold, steps)
    probe = analyse_sequence(E, eps, np.asarray(vals), threshold, steps, floored)
    return probe


def weak_limit_of_remainder(system, E: float, eps_seq, phis, psis, threads: int = 1,
                            threshold: float = 0.7, steps: int = 3) -> LimitProbe:
    """Probe ``(R0 N phi, psi)`` where ``N = Gamma - sum Gamma_i``."""
    return limiting_absorption_probe(system, E, eps_seq, phis, psis, threads, threshold, steps,
                                     evaluate=system.remainder_elements)
