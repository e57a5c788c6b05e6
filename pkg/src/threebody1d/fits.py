"""Exponent fits for algebraic singularities in coordinate and momentum space."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class LeakageError(ValueError):
    """The momentum fit window is too close to the transform resolution."""


@dataclass
class SingularityFit:
    """Result of a log-log fit.

    ``exponent`` is the fitted power, ``phase_velocity`` the slope of the
    unwrapped phase (coordinate fits only), ``residual`` the RMS misfit of
    ``log|f|`` (plus phase misfit) over ``window``.
    """

    exponent: float
    amplitude: float
    phase_velocity: float
    residual: float
    window: tuple
    algebraic: bool
    n_points: int


def fit_coordinate_singularity(y, f, E: float, decay: float = 0.0, window=None,
                               min_periods: float = 1.0, residual_threshold: float = 0.1) -> SingularityFit:
    """Fit ``f ~ c |y|^alpha exp(i beta |y|)`` on a far-field window.

    Parameters
    ----------
    y, f : array_like
        Samples along one half-line (the sign of ``y`` is ignored).
    E : float
        Energy; sets the oscillation period ``2 pi / sqrt(E)``.
    decay : float
        Known exponential decay rate ``Im sqrt(lam)`` removed before fitting.
    window : (float, float), optional
        Range of ``|y|`` to use; defaults to all samples.
    min_periods : float
        Minimum window length in oscillation periods.

    Raises
    ------
    ValueError
        If the window is shorter than ``min_periods`` oscillation periods.
    """
    ay = np.abs(np.asarray(y, dtype=float))
    f = np.asarray(f, dtype=complex)
    if window is not None:
        m = (ay >= window[0]) & (ay <= window[1])
        ay, f = ay[m], f[m]
    order = np.argsort(ay)
    ay, f = ay[order], f[order]
    if ay.size < 3:
        raise ValueError("fit window holds fewer than three samples")
    span = ay[-1] - ay[0]
    period = 2 * np.pi / np.sqrt(E)
    if span < min_periods * period:
        raise ValueError(f"fit window length {span:.3g} is shorter than {min_periods:g} oscillation "
                         f"period(s) 2*pi/sqrt(E) = {period:.3g}")
    if np.any(f == 0):
        return SingularityFit(np.nan, 0.0, np.nan, np.inf, (ay[0], ay[-1]), False, ay.size)
    A = np.column_stack([np.ones_like(ay), np.log(ay)])
    target = np.log(np.abs(f)) + decay * ay
    coef, *_ = np.linalg.lstsq(A, target, rcond=None)
    mag_res = target - A @ coef
    ph = np.unwrap(np.angle(f))
    pc = np.polyfit(ay, ph, 1)
    ph_res = ph - np.polyval(pc, ay)
    residual = float(np.sqrt(np.mean(mag_res**2) + np.mean(ph_res**2)))
    return SingularityFit(float(coef[1]), float(np.exp(coef[0])), float(pc[0]), residual,
                          (float(ay[0]), float(ay[-1])), residual < residual_threshold, int(ay.size))


def fourier_transform_1d(y, g, pad: int = 4):
    """``g_hat(p) = int g(y) exp(-i p y) dy`` on a uniform grid via FFT.

    Returns ``(p, g_hat)`` with ``p`` sorted ascending.
    """
    y = np.asarray(y, dtype=float)
    dy = y[1] - y[0]
    n = pad * y.size
    gh = np.fft.fft(np.asarray(g, dtype=complex), n) * dy
    p = 2 * np.pi * np.fft.fftfreq(n, dy)
    # shift phase to the true origin y[0]
    gh *= np.exp(-1j * p * y[0])
    order = np.argsort(p)
    return p[order], gh[order]


@dataclass
class MomentumFit:
    """Per-branch fits near ``p = +sqrt(E)`` and ``p = -sqrt(E)``."""

    plus: SingularityFit
    minus: SingularityFit
    resolution: float
    strengths: tuple = (0.0, 0.0)

    def singular(self, threshold: float = -0.1) -> bool:
        return any(b.algebraic and b.exponent < threshold for b in (self.plus, self.minus))


def _side_fit(d, f, beta):
    """Least-squares ``c d^beta + a0 + a1 d + a2 d^2``; returns (coeffs, relative residual)."""
    X = np.column_stack([d**beta, np.ones_like(d), d, d * d])
    coef, *_ = np.linalg.lstsq(X, f, rcond=None)
    r = np.linalg.norm(X @ coef - f) / max(np.linalg.norm(f), 1e-300)
    return coef, float(r)


def _branch_fit(delta, f, lo, hi):
    from scipy.optimize import minimize_scalar

    def total(beta):
        return sum(_side_fit(delta[m], f[m], beta)[1] ** 2 for m in sides)

    sides = [(delta >= lo) & (delta <= hi), (-delta >= lo) & (-delta <= hi)]
    sides = [m for m in sides if m.sum() >= 6]
    if not sides:
        raise LeakageError("too few samples in the momentum fit window")
    ad = np.abs(delta)
    sides_abs = sides
    delta = ad
    sides = sides_abs
    opt = minimize_scalar(total, bounds=(-1.5, 1.5), method="bounded", options={"xatol": 1e-6})
    beta = float(opt.x)
    strength = 0.0
    amp = 0.0
    for m in sides:
        coef, _ = _side_fit(delta[m], f[m], beta)
        amp = max(amp, abs(coef[0]))
        strength = max(strength, float(np.max(np.abs(coef[0]) * delta[m] ** beta) / np.max(np.abs(f[m]))))
    return beta, amp, float(np.sqrt(opt.fun / len(sides))), strength, int(sum(m.sum() for m in sides))


def fit_momentum_singularity(p, fhat, E: float, delta_range=(0.01, 0.1), resolution=None,
                             leakage_factor: float = 8.0, strength_threshold: float = 1e-3) -> MomentumFit:
    """Fit ``f_hat(p) ~ c |p -+ sqrt(E)|^beta + smooth`` near both branch points.

    The smooth background is a quadratic in the distance to the branch
    point, fitted jointly with the singular term separately on each side.
    A branch counts as singular when its term carries at least
    ``strength_threshold`` of the local magnitude.

    ``resolution`` is the transform's momentum resolution ``2 pi / window``
    (defaults to the sample spacing).  A lower fit bound closer than
    ``leakage_factor * resolution`` raises :class:`LeakageError`.
    """
    p = np.asarray(p, dtype=float)
    fhat = np.asarray(fhat, dtype=complex)
    res = float(resolution if resolution is not None else np.min(np.diff(p)))
    lo, hi = delta_range
    if lo < leakage_factor * res:
        raise LeakageError(f"fit bound {lo:g} is within {leakage_factor:g}x the transform resolution "
                           f"{res:.3g}; widen the transform window")
    s = np.sqrt(E)
    fits, strengths = [], []
    for centre in (s, -s):
        beta, amp, r, strength, n = _branch_fit(p - centre, fhat, lo, hi)
        fits.append(SingularityFit(beta, amp, np.nan, r, (lo, hi), strength > strength_threshold, n))
        strengths.append(strength)
    return MomentumFit(fits[0], fits[1], res, tuple(strengths))


def type_a_transform(p, E: float, chi, side: int = 1, order: int = 200) -> np.ndarray:
    """Exact transform of ``chi(side*y) |y|^{-1/2} exp(i |y| sqrt(E))``.

    ``int g(y) exp(-i p y) dy`` is split into the half-line integral
    ``sqrt(pi/|d|) exp(+-i pi/4)`` with ``d = sqrt(E) - side*p`` and a
    finite correction over ``[0, T + w]`` evaluated by Gauss-Legendre in
    the variable ``s = sqrt(y)``.
    """
    p = np.asarray(p, dtype=float)
    d = np.sqrt(E) - side * p
    with np.errstate(divide="ignore", invalid="ignore"):
        full = np.sqrt(np.pi / np.abs(d)) * np.exp(1j * np.pi / 4 * np.sign(d))
    smax = np.sqrt(chi.T + chi.w)
    xg, wg = np.polynomial.legendre.leggauss(order)
    s = 0.5 * smax * (xg + 1)
    ws = 0.5 * smax * wg
    y = s * s
    # y^{-1/2} dy = 2 ds
    corr = np.exp(1j * np.multiply.outer(d, y)) @ (2 * ws * (1 - chi(y)))
    return full - corr
