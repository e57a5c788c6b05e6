"""Discrete estimator for the weighted Hölder norm

    ||f||_{mu,theta} = sup_{xi,eta} (1 + |xi|^{1+theta}) (|f(xi)| + |f(xi+eta) - f(xi)| / |eta|^mu)

on uniform grids in one or two dimensions, plus a refinement-trend classifier.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np


@dataclass(frozen=True)
class HolderParams:
    """Exponents and offset scales for the estimator.

    Parameters
    ----------
    mu : float
        Hölder exponent in (0, 1).
    theta : float
        Weight exponent in (0, 1).
    offsets : sequence of float
        Offset lengths |eta| (physical units).  Each is rounded to the nearest
        positive multiple of the grid spacing; lengths below the spacing are
        dropped.
    """

    mu: float
    theta: float
    offsets: tuple = (1.0, 0.5, 0.25)

    def __post_init__(self):
        if not (0.0 < self.mu < 1.0 and 0.0 < self.theta < 1.0):
            raise ValueError("mu and theta must lie in (0, 1)")
        offs = tuple(float(o) for o in self.offsets)
        if len(offs) == 0:
            raise ValueError("empty offset set")
        if any(o <= 0 for o in offs):
            raise ValueError("offsets must be positive")
        object.__setattr__(self, "offsets", offs)


def dyadic_offsets(eta_max: float, spacing: float) -> tuple:
    """Offsets eta_max, eta_max/2, ... down to the grid spacing."""
    out = []
    eta = float(eta_max)
    while eta >= spacing * (1 - 1e-9):
        out.append(eta)
        eta /= 2.0
    return tuple(out)


def _index_offsets(offsets, spacing):
    steps = sorted({int(round(o / spacing)) for o in offsets if o >= spacing * (1 - 1e-9)})
    steps = [s for s in steps if s > 0]
    if not steps:
        raise ValueError("empty offset set after projection onto the grid")
    return steps


def holder_norm(values, spacing: float, params: HolderParams, origin=None) -> float:
    """Discrete sup of the weighted Hölder expression.

    Parameters
    ----------
    values : ndarray, 1-D or 2-D
        Samples on a uniform grid.
    spacing : float
        Grid spacing (same along both axes in 2-D).
    params : HolderParams
    origin : float or pair of float, optional
        Coordinate of ``values[0]`` (or ``values[0, 0]``).  Defaults to a grid
        centred on zero.

    Returns
    -------
    float
        The discrete sup.  Enlarging the offset set can only increase it.
    """
    f = np.asarray(values)
    if f.ndim not in (1, 2):
        raise ValueError("holder_norm supports 1-D and 2-D grids")
    steps = _index_offsets(params.offsets, spacing)
    if origin is None:
        origin = [-(n - 1) * spacing / 2 for n in f.shape]
    origin = np.broadcast_to(np.asarray(origin, dtype=float), (f.ndim,))
    axes = [origin[d] + spacing * np.arange(f.shape[d]) for d in range(f.ndim)]
    if f.ndim == 1:
        r = np.abs(axes[0])
        directions = [(1,), (-1,)]
    else:
        X, Y = np.meshgrid(*axes, indexing="ij")
        r = np.hypot(X, Y)
        directions = [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (-1, -1), (1, -1), (-1, 1)]
    w = 1.0 + r ** (1.0 + params.theta)
    absf = np.abs(f)
    best = float(np.max(w * absf)) if f.size else 0.0
    for s in steps:
        for d in directions:
            shift = tuple(s * c for c in d)
            src = tuple(slice(max(0, -o), n - max(0, o)) for o, n in zip(shift, f.shape))
            dst = tuple(slice(max(0, o), n - max(0, -o)) for o, n in zip(shift, f.shape))
            if any(sl.stop <= sl.start for sl in src):
                continue
            eta = spacing * s * np.sqrt(sum(c * c for c in d))
            q = w[src] * (absf[src] + np.abs(f[dst] - f[src]) / eta ** params.mu)
            best = max(best, float(q.max()))
    return best


@dataclass
class HolderTrend:
    """Estimator values along a refinement sequence."""

    values: list
    spacings: list
    extents: list
    drift: float
    status: str  # finite | divergent | inconclusive
    growth_exponent: float = float("nan")

    @property
    def value(self) -> float:
        return self.values[-1]


def classify_trend(values: Sequence[float], spacings: Sequence[float], tol: float = 0.02,
                   growth_tol: float = 0.03):
    """Classify a refinement sequence as finite, divergent or inconclusive.

    Returns ``(status, drift, growth_exponent)``.  Growth is measured as the
    log-slope of the value against the refinement level.
    """
    v = np.asarray(values, dtype=float)
    if np.all(v == 0):
        return "finite", 0.0, 0.0
    drift = abs(v[-1] - v[-2]) / max(abs(v[-1]), 1e-300)
    ratios = v[1:] / np.maximum(v[:-1], 1e-300)
    levels = np.arange(len(v))
    slope = float(np.polyfit(levels, np.log(np.maximum(v, 1e-300)), 1)[0]) if len(v) > 1 else 0.0
    if drift < tol:
        return "finite", float(drift), slope
    tail = ratios[-2:] if len(ratios) >= 2 else ratios
    if np.all(tail > 1 + growth_tol):
        return "divergent", float(drift), slope
    return "inconclusive", float(drift), slope


def holder_refinement(func: Callable, mu: float, theta: float, extent: float, spacing: float,
                      levels: int = 4, extend: bool = False, eta_max: float = 1.0,
                      center: float = 0.0, tol: float = 0.02) -> HolderTrend:
    """Evaluate the 1-D estimator on successively refined grids.

    Each level halves the spacing and adds the matching finer dyadic offset;
    with ``extend`` the window half-width also doubles.
    """
    vals, hs, exts = [], [], []
    for m in range(levels):
        d = spacing / 2**m
        X = extent * (2**m if extend else 1)
        n = int(round(X / d))
        xi = center + d * np.arange(-n, n + 1)
        params = HolderParams(mu, theta, dyadic_offsets(eta_max, d))
        vals.append(holder_norm(func(xi), d, params, origin=xi[0]))
        hs.append(d)
        exts.append(X)
    status, drift, slope = classify_trend(vals, hs, tol)
    return HolderTrend(vals, hs, exts, drift, status, slope)
