"""One-dimensional two-body scattering for finite, even, repulsive potentials.

Units: hbar = 2m = 1, so the equation is ``-phi'' + v phi = k^2 phi``.

Conventions
-----------
For ``k > 0`` the eigenfunction is incident from the left::

    phi(x, k) = exp(ikx) + r exp(-ikx)   (x < -a)
    phi(x, k) = t exp(ikx)               (x > a)

For ``k < 0`` the incoming wave ``exp(ikx)`` arrives from the right, i.e. the
roles of the two sides are exchanged.  With this choice ``{phi(., k)}`` over
all real ``k`` is complete with spectral measure ``dk / (2 pi)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.integrate import solve_ivp

from .holder import HolderTrend, holder_refinement

_GL_CACHE: dict = {}


def _gauss(n):
    if n not in _GL_CACHE:
        _GL_CACHE[n] = np.polynomial.legendre.leggauss(n)
    return _GL_CACHE[n]


class PairSolverError(RuntimeError):
    """Raised when the ODE integration does not converge."""


@dataclass(frozen=True)
class Potential:
    """Finite, even, non-negative pair potential.

    Parameters
    ----------
    kind : str
        ``zero``, ``rectangular``, ``smooth_bump`` or ``tabulated``.
    a : float
        Support radius; ``v(x) = 0`` for ``|x| > a``.
    height : float
        Peak value for the closed forms.
    power : int
        Exponent ``p`` of the smooth bump ``height * (1 - (x/a)^2)^p``.
    samples : tuple of (x, v) arrays, optional
        Tabulated input on ``[-a, a]`` (linear interpolation).
    """

    kind: str
    a: float = 1.0
    height: float = 0.0
    power: int = 4
    samples: Optional[tuple] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in ("zero", "rectangular", "smooth_bump", "tabulated"):
            raise ValueError(f"unknown potential kind {self.kind!r}")
        if not self.a > 0:
            raise ValueError("support radius a must be positive")
        if self.height < 0:
            raise ValueError("potential must be non-negative (repulsive)")
        if self.kind == "tabulated":
            if self.samples is None:
                raise ValueError("tabulated potential needs samples")
            xs, vs = (np.asarray(s, dtype=float) for s in self.samples)
            if xs.ndim != 1 or xs.shape != vs.shape or np.any(np.diff(xs) <= 0):
                raise ValueError("tabulated samples must be strictly increasing x with matching v")
            if np.any(vs < 0):
                raise ValueError("potential must be non-negative (repulsive)")
            if xs[0] < -self.a - 1e-12 or xs[-1] > self.a + 1e-12:
                raise ValueError("tabulated samples extend beyond the support radius")
            if not np.allclose(np.interp(-xs, xs, vs, left=0, right=0), vs, atol=1e-12, rtol=1e-9):
                raise ValueError("tabulated potential is not even")
            object.__setattr__(self, "samples", (xs, vs))

    # ---- closed forms -------------------------------------------------
    @property
    def is_zero(self) -> bool:
        return self.kind == "zero" or (self.kind != "tabulated" and self.height == 0)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        inside = np.abs(x) < self.a
        if self.is_zero:
            return np.zeros_like(x)
        if self.kind == "rectangular":
            return np.where(inside, self.height, 0.0)
        if self.kind == "smooth_bump":
            s = np.clip(1.0 - (x / self.a) ** 2, 0.0, None)
            return np.where(inside, self.height * s**self.power, 0.0)
        xs, vs = self.samples
        return np.interp(x, xs, vs, left=0.0, right=0.0)

    @property
    def breakpoints(self) -> np.ndarray:
        """Points where v or a low derivative jumps; ODE integration splits here."""
        if self.kind == "tabulated":
            return np.unique(np.concatenate([[-self.a, self.a], self.samples[0]]))
        return np.array([-self.a, self.a])

    def antiderivative(self, x):
        """``P(x) = integral_{-inf}^x v``."""
        x = np.clip(np.asarray(x, dtype=float), -self.a, self.a)
        if self.is_zero:
            return np.zeros_like(x)
        if self.kind == "rectangular":
            return self.height * (x + self.a)
        if self.kind == "smooth_bump":
            coeffs = np.polynomial.polynomial.polypow([1.0, 0.0, -1.0 / self.a**2], self.power)
            prim = np.polynomial.polynomial.polyint(coeffs, lbnd=-self.a)
            return self.height * np.polynomial.polynomial.polyval(x, prim)
        xs, vs = self.samples
        xe = np.concatenate([[-self.a], xs, [self.a]])
        ve = np.interp(xe, xs, vs, left=0.0, right=0.0)
        cum = np.concatenate([[0.0], np.cumsum(0.5 * (ve[1:] + ve[:-1]) * np.diff(xe))])
        idx = np.clip(np.searchsorted(xe, x, side="right") - 1, 0, len(xe) - 2)
        dx = x - xe[idx]
        slope = (ve[idx + 1] - ve[idx]) / np.maximum(xe[idx + 1] - xe[idx], 1e-300)
        return cum[idx] + ve[idx] * dx + 0.5 * slope * dx**2

    @property
    def total(self) -> float:
        return float(self.antiderivative(self.a))

    def staircase(self, n_slices: int = 800):
        """Midpoint piecewise-constant approximation on ``[-a, a]``.

        Returns ``(edges, values)`` where ``values`` has a zero sentinel on
        both sides.  The rectangular barrier is represented exactly by one slice.
        """
        if self.kind == "rectangular" or self.is_zero:
            n_slices = 1
        edges = np.linspace(-self.a, self.a, n_slices + 1)
        mid = 0.5 * (edges[1:] + edges[:-1])
        vals = np.concatenate([[0.0], self(mid), [0.0]])
        return edges, vals

    def fourier(self, xi):
        """``v_hat(xi) = integral v(x) exp(-i xi x) dx`` (real, since v is even)."""
        xi = np.asarray(xi, dtype=float)
        if self.is_zero:
            return np.zeros_like(xi)
        if self.kind == "rectangular":
            return 2 * self.height * self.a * np.sinc(self.a * xi / np.pi)
        # Gauss-Legendre on the support; node count follows the oscillation
        nodes = self.breakpoints
        n = int(64 + self.a * np.max(np.abs(xi), initial=0.0))
        xg, wg = _gauss(min(n, 4000))
        out = np.zeros(xi.shape)
        for lo, hi in zip(nodes[:-1], nodes[1:]):
            xq = 0.5 * (hi - lo) * xg + 0.5 * (hi + lo)
            wq = 0.5 * (hi - lo) * wg
            out += np.cos(np.multiply.outer(xi, xq)) @ (wq * self(xq))
        return out


def rectangular(height: float, half_width: float) -> Potential:
    return Potential("rectangular", a=half_width, height=height)


def smooth_bump(height: float, half_width: float, power: int = 4) -> Potential:
    return Potential("smooth_bump", a=half_width, height=height, power=power)


def zero_potential(a: float = 1.0) -> Potential:
    return Potential("zero", a=a)


def tabulated(xs, vs, a: Optional[float] = None) -> Potential:
    xs = np.asarray(xs, dtype=float)
    return Potential("tabulated", a=float(a if a is not None else np.max(np.abs(xs))), samples=(xs, vs))


POTENTIAL_REGISTRY = {
    "zero": lambda p: zero_potential(float(p.get("half_width", 1.0))),
    "rectangular": lambda p: rectangular(float(p["height"]), float(p["half_width"])),
    "smooth_bump": lambda p: smooth_bump(float(p["height"]), float(p["half_width"]), int(p.get("power", 4))),
}


def potential_from_mapping(spec) -> Potential:
    """Build a potential from a flat key-value mapping (one config section).

    Keys: ``kind`` plus ``height``, ``half_width``, ``power`` for closed forms,
    or ``x`` and ``v`` (comma-separated numbers) for tabulated input.
    """
    kind = str(spec.get("kind", "")).strip()
    try:
        if kind == "tabulated":
            xs = [float(t) for t in str(spec["x"]).split(",")]
            vs = [float(t) for t in str(spec["v"]).split(",")]
            a = spec.get("half_width")
            return tabulated(xs, vs, None if a is None else float(a))
        if kind not in POTENTIAL_REGISTRY:
            raise ValueError(f"unknown potential kind {kind!r}")
        return POTENTIAL_REGISTRY[kind](spec)
    except KeyError as exc:
        raise ValueError(f"potential field {exc.args[0]!r} missing") from None


# ---------------------------------------------------------------------------
# scattering data
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ScatteringData:
    """Transmission, reflection and an eigenfunction evaluator at one ``k``."""

    k: float
    t: complex
    r: complex
    potential: Potential = field(repr=False)
    _inner: Callable = field(repr=False, compare=False)
    residual: float = 0.0

    def phi(self, x):
        """Evaluate ``phi(x, k)`` anywhere on the line."""
        x = np.asarray(x, dtype=float)
        k, a = self.k, self.potential.a
        # "near" side is where the incoming wave lives
        s = 1.0 if k > 0 else -1.0
        near = s * x <= -a
        far = s * x >= a
        out = np.empty(x.shape, dtype=complex)
        out[near] = np.exp(1j * k * x[near]) + self.r * np.exp(-1j * k * x[near])
        out[far] = self.t * np.exp(1j * k * x[far])
        mid = ~(near | far)
        if np.any(mid):
            out[mid] = self._inner(x[mid])
        return out

    @property
    def unitarity_defect(self) -> float:
        return abs(abs(self.t) ** 2 + abs(self.r) ** 2 - 1.0)


def _rhs(k):
    k2 = k * k

    def f(x, u, v):
        # u = (Re phi, Im phi, Re phi', Im phi')
        w = v(x) - k2
        return np.array([u[2], u[3], w * u[0], w * u[1]])

    return f


def _integrate(potential, k, y0, x_from, x_to, rtol, atol):
    """Integrate across the support piecewise between breakpoints."""
    bps = potential.breakpoints
    seg = np.unique(np.concatenate([[x_from, x_to], bps[(bps > min(x_from, x_to)) & (bps < max(x_from, x_to))]]))
    if x_to < x_from:
        seg = seg[::-1]
    f = _rhs(k)
    sols = []
    y = np.asarray(y0, dtype=float)
    for lo, hi in zip(seg[:-1], seg[1:]):
        sol = solve_ivp(lambda x, u: f(x, u, potential), (lo, hi), y, method="DOP853",
                        rtol=rtol, atol=atol, dense_output=True, max_step=abs(hi - lo) / 8)
        if sol.status != 0:
            raise PairSolverError(f"integration failed on [{lo:g}, {hi:g}] at k={k:g}: {sol.message}")
        sols.append((min(lo, hi), max(lo, hi), sol.sol))
        y = sol.y[:, -1]
    return y, sols


def _dense_eval(sols, x):
    out = np.empty((4, x.size))
    for lo, hi, s in sols:
        m = (x >= lo) & (x <= hi)
        if np.any(m):
            out[:, m] = s(x[m])
    return out


def solve_pair(potential: Potential, k: float, rtol: float = 1e-12, atol: float = 1e-14) -> ScatteringData:
    """Scattering solution at real ``k != 0`` by adaptive Runge-Kutta.

    The outgoing side is seeded with ``exp(ikx)`` and integrated through the
    support; matching to plane waves on the incoming side yields ``t, r``.
    """
    k = float(k)
    if k == 0.0:
        raise ValueError("k = 0 is degenerate; use zero_energy_solution")
    a = potential.a
    s = 1.0 if k > 0 else -1.0
    x_out, x_in = s * a, -s * a
    e = np.exp(1j * k * x_out)
    y0 = np.array([e.real, e.imag, (1j * k * e).real, (1j * k * e).imag])
    y, sols = _integrate(potential, k, y0, x_out, x_in, rtol, atol)
    ph = y[0] + 1j * y[1]
    dph = y[2] + 1j * y[3]
    A = 0.5 * (ph + dph / (1j * k)) * np.exp(-1j * k * x_in)
    B = 0.5 * (ph - dph / (1j * k)) * np.exp(1j * k * x_in)
    t = 1.0 / A
    r = B / A

    def inner(x, sols=sols, t=t):
        u = _dense_eval(sols, np.atleast_1d(x))
        return t * (u[0] + 1j * u[1])

    return ScatteringData(k, complex(t), complex(r), potential, inner)


def ode_residual(data: ScatteringData, n: int = 401) -> float:
    """Max-norm residual of ``-phi'' + (v - k^2) phi`` over the support.

    The second derivative comes from a sixth-order central difference of the
    dense solution, evaluated inside smooth segments only.
    """
    pot = data.potential
    bps = pot.breakpoints
    hstep = 1e-3 * pot.a
    c = np.array([1 / 90, -3 / 20, 3 / 2, -49 / 18, 3 / 2, -3 / 20, 1 / 90])
    worst = 0.0
    for lo, hi in zip(bps[:-1], bps[1:]):
        x = np.linspace(lo + 4 * hstep, hi - 4 * hstep, max(8, n // len(bps)))
        d2 = sum(ci * data.phi(x + (m - 3) * hstep) for m, ci in enumerate(c)) / hstep**2
        res = -d2 + (pot(x) - data.k**2) * data.phi(x)
        worst = max(worst, float(np.max(np.abs(res))))
    return worst


def rectangular_barrier_coefficients(height: float, a: float, k: float):
    """Closed-form ``(t, r)`` for ``v = height`` on ``[-a, a]`` and ``k > 0``."""
    q = np.sqrt(complex(k * k - height))
    if abs(q) < 1e-14:
        q = 1e-14
    d = 2 * a
    sin, cos = np.sin(q * d), np.cos(q * d)
    den = cos - 1j * (k * k + q * q) / (2 * k * q) * sin
    t = np.exp(-1j * k * d) / den
    r = 1j * (q * q - k * k) / (2 * k * q) * sin * np.exp(-1j * k * d) / den
    return complex(t), complex(r)


# ---------------------------------------------------------------------------
# transfer-matrix backend (exact for piecewise constant potentials)
# ---------------------------------------------------------------------------

def transfer_eigenfunctions(x, k, edges, vals) -> np.ndarray:
    """Left-incident eigenfunctions of a piecewise constant potential.

    Parameters
    ----------
    x : ndarray, shape (m,)
    k : ndarray, shape (nk,), all positive
    edges : ndarray, shape (ns+1,)
        Slice boundaries.
    vals : ndarray, shape (ns+2,)
        Slice values with zero sentinels for the two exterior regions.

    Returns
    -------
    ndarray, shape (nk, m)
    """
    k = np.asarray(k, dtype=float)[:, None]
    x = np.asarray(x, dtype=float)
    q = np.sqrt(k * k - vals[None, :] + 0j)
    q = np.where(np.abs(q) < 1e-14, 1e-14, q)
    n = vals.size
    A = np.zeros((k.shape[0], n), complex)
    B = np.zeros_like(A)
    A[:, -1] = 1.0
    for j in range(n - 1, 0, -1):
        xe = edges[j - 1]
        ep = np.exp(1j * q[:, j] * xe)
        val = A[:, j] * ep + B[:, j] / ep
        der = 1j * q[:, j] * (A[:, j] * ep - B[:, j] / ep)
        qq = q[:, j - 1]
        e2 = np.exp(-1j * qq * xe)
        A[:, j - 1] = 0.5 * (val + der / (1j * qq)) * e2
        B[:, j - 1] = 0.5 * (val - der / (1j * qq)) / e2
    s = 1.0 / A[:, 0]
    A *= s[:, None]
    B *= s[:, None]
    idx = np.searchsorted(edges, x)
    qi = q[:, idx]
    return A[:, idx] * np.exp(1j * qi * x) + B[:, idx] * np.exp(-1j * qi * x)


def transfer_coefficients(k, edges, vals):
    """``(t, r)`` arrays for positive ``k`` from the transfer-matrix backend."""
    k = np.atleast_1d(np.asarray(k, dtype=float))
    a_left, a_right = edges[0], edges[-1]
    far = transfer_eigenfunctions(np.array([a_right + 1.0]), k, edges, vals)[:, 0]
    t = far * np.exp(-1j * k * (a_right + 1.0))
    near = transfer_eigenfunctions(np.array([a_left - 1.0]), k, edges, vals)[:, 0]
    r = (near - np.exp(1j * k * (a_left - 1.0))) * np.exp(1j * k * (a_left - 1.0))
    return t, r


def eigenfunctions_batch(potential: Potential, x, k, n_slices: int = 800) -> np.ndarray:
    """``phi(x, k)`` for many ``k`` of either sign via the staircase backend.

    Negative ``k`` uses ``phi(x, k) = phi(-x, |k|)``, valid for even potentials.
    Returns an array of shape ``(len(k), len(x))``.
    """
    k = np.asarray(k, dtype=float)
    x = np.asarray(x, dtype=float)
    if potential.is_zero:
        return np.exp(1j * np.multiply.outer(k, x))
    edges, vals = potential.staircase(n_slices)
    out = np.empty((k.size, x.size), dtype=complex)
    pos = k > 0
    if np.any(pos):
        out[pos] = transfer_eigenfunctions(x, k[pos], edges, vals)
    if np.any(~pos):
        out[~pos] = transfer_eigenfunctions(-x, -k[~pos], edges, vals)
    return out


# ---------------------------------------------------------------------------
# zero energy
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ZeroEnergySolution:
    """Solution of ``-phi'' + v phi = 0`` with ``phi = 1`` for ``x <= -a``.

    Beyond ``a`` it continues linearly with slope ``slope``.
    """

    potential: Potential = field(repr=False)
    value_at_a: float
    slope: float
    _inner: Callable = field(repr=False, compare=False)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        a = self.potential.a
        out = np.ones(x.shape)
        right = x >= a
        out[right] = self.value_at_a + self.slope * (x[right] - a)
        mid = (x > -a) & ~right
        if np.any(mid):
            out[mid] = self._inner(x[mid])
        return out


def zero_energy_solution(potential: Potential, rtol: float = 1e-12, atol: float = 1e-14) -> ZeroEnergySolution:
    """Zero-energy solution normalised to 1 on the far left.

    This is the limit ``k -> 0`` of the Jost solution ``phi(x, -k) / t(k)``,
    which equals ``exp(-ikx)`` for ``x < -a``.
    """
    a = potential.a
    y, sols = _integrate(potential, 0.0, np.array([1.0, 0.0, 0.0, 0.0]), -a, a, rtol, atol)

    def inner(x, sols=sols):
        return _dense_eval(sols, np.atleast_1d(x))[0]

    return ZeroEnergySolution(potential, float(y[0]), float(y[2]), inner)


def jost_left(potential: Potential, k: float) -> Callable:
    """``x -> phi(x, -|k|) / t(|k|)``, equal to ``exp(-i|k|x)`` left of the support."""
    d = solve_pair(potential, -abs(k))
    return lambda x: d.phi(x) / d.t


def bound_state_scan(potential: Potential, kappas=None) -> list:
    """Locate negative-energy eigenvalues ``E = -kappa^2`` by a sign scan.

    Integrates the solution decaying on the left, ``exp(kappa x)``, through the
    support and records where the coefficient of the growing mode on the right
    changes sign.  Returns the list of bracketing kappa intervals (empty when
    there are no bound states).
    """
    if kappas is None:
        kappas = np.linspace(0.05, 5.0, 100)
    grow = []
    for kap in kappas:
        y = _integrate_real(potential, kap)
        # right side: phi = C exp(kappa x) + D exp(-kappa x); C is the growing part
        grow.append(0.5 * (y[0] + y[1] / kap))
    grow = np.asarray(grow)
    idx = np.where(np.sign(grow[1:]) != np.sign(grow[:-1]))[0]
    return [(float(kappas[i]), float(kappas[i + 1])) for i in idx]


def _integrate_real(potential, kap):
    a = potential.a
    bps = potential.breakpoints
    y = np.array([1.0, kap])
    for lo, hi in zip(bps[:-1], bps[1:]):
        sol = solve_ivp(lambda x, u: [u[1], (potential(x) + kap * kap) * u[0]], (lo, hi), y,
                        method="DOP853", rtol=1e-10, atol=1e-12)
        y = sol.y[:, -1]
    # scale so that exp(kappa x) normalisation is relative to x = a
    return y * np.exp(-kap * (2 * a))


# ---------------------------------------------------------------------------
# 2-D eigenfunctions and Fourier regularity
# ---------------------------------------------------------------------------

def eigenfunction_2d(frame, q, z, potential: Potential, reference: int = 1):
    """``psi_j(z, q) = phi_j(x_j, k) exp(i y_j p)``.

    Parameters
    ----------
    frame : JacobiFrame or int
        Frame ``j`` of the pair interaction.
    q : (k, p)
    z : array_like, shape (2,) or (n, 2)
        Points in the coordinates of frame ``reference``.
    """
    from .geometry import rotate

    j = getattr(frame, "index", frame)
    k, p = q
    zz = np.atleast_2d(np.asarray(z, dtype=float))
    xy = rotate(zz, reference, j)
    if k == 0:
        phi = zero_energy_solution(potential)(xy[:, 0]).astype(complex)
    else:
        phi = solve_pair(potential, k).phi(xy[:, 0])
    out = phi * np.exp(1j * p * xy[:, 1])
    return out if np.ndim(z) > 1 else out[0]


@dataclass
class FourierHolderReport:
    """Regularity estimate of ``v_hat`` in the weighted Hölder class."""

    mu0: float
    theta0: float
    values: list
    drift: float
    status: str  # finite | divergent | inconclusive
    growth_exponent: float

    @property
    def value(self) -> float:
        return self.values[-1]


def fourier_holder_check(potential: Potential, mu0: float, theta0: float, extent: float = 16.0,
                         spacing: float = 0.25, levels: int = 4, tol: float = 0.02) -> FourierHolderReport:
    """Estimate the 1-D weighted Hölder norm of ``v_hat`` under refinement.

    Each refinement level doubles the frequency window and halves the
    spacing.  A slowly decaying transform (e.g. ``1/xi``) shows up as
    sustained growth and is reported as divergent.
    """
    if not (0 < mu0 < 1 and 0 < theta0 < 1):
        raise ValueError("mu0 and theta0 must lie in (0, 1)")
    trend: HolderTrend = holder_refinement(potential.fourier, mu0, theta0, extent, spacing,
                                           levels=levels, extend=True, tol=tol)
    return FourierHolderReport(mu0, theta0, trend.values, trend.drift, trend.status, trend.growth_exponent)
