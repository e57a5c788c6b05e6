"""Independent reference computations used to validate the grid paths.

None of these touch the 2-D Nyström machinery: the free case works in
momentum space, the single-strip case separates into a 1-D spectral
integral in ``x`` and a 1-D free resolvent in ``y``.
"""
from __future__ import annotations

import numpy as np
from .operators import smooth_bump
from .pair import Potential, eigenfunctions_batch

_GL = {}


def _gl(n):
    if n not in _GL:
        _GL[n] = np.polynomial.legendre.leggauss(n)
    return _GL[n]


def _bump_nodes(center, width, n=400):
    """Gauss-Legendre nodes/weights over the support of a centred bump."""
    xg, wg = _gl(n)
    return center + width * xg, width * wg * smooth_bump(xg)


def bump_transform(q, center: float, width: float, n: int = 400) -> np.ndarray:
    """``int B((x - c)/w) exp(-i q x) dx`` by Gauss-Legendre."""
    x, w = _bump_nodes(center, width, n)
    return np.exp(-1j * np.multiply.outer(np.asarray(q, dtype=float), x)) @ w


def free_limit_form(E: float, phi_spec, psi_spec, eps: float = 0.0, rho_max: float = 40.0,
                    n_theta: int = 128, n_bump: int = 200) -> complex:
    """``(R0(E + i eps) phi, psi)`` for products of smooth bumps.

    ``*_spec`` are ``((cx, cy), (wx, wy))``.  The momentum integral is taken
    in polar form.  For ``eps = 0`` the radial pole is split off as a
    principal value plus ``i pi Phi(sqrt E) / 2``; the principal value uses
    the symmetric subtraction ``[F(k + s) - F(k - s)] / s`` on ``[0, k]``.
    """
    (ax, ay), (awx, awy) = phi_spec
    (bx, by), (bwx, bwy) = psi_spec
    th = 2 * np.pi * np.arange(n_theta) / n_theta
    c, s = np.cos(th), np.sin(th)

    def Phi(rho, chunk=64):
        rho = np.atleast_1d(rho)
        out = np.empty(rho.shape, dtype=complex)
        for lo in range(0, rho.size, chunk):
            r = rho[lo:lo + chunk]
            qx, qy = np.multiply.outer(r, c), np.multiply.outer(r, s)
            f = bump_transform(qx, ax, awx, n_bump) * bump_transform(qy, ay, awy, n_bump)
            g = bump_transform(qx, bx, bwx, n_bump) * bump_transform(qy, by, bwy, n_bump)
            out[lo:lo + chunk] = (f * np.conj(g)).mean(axis=-1) * 2 * np.pi
        return out

    k = np.sqrt(E)
    xg, wg = _gl(48)
    lam = E + 1j * eps

    def panels(lo, hi, n):
        e = np.linspace(lo, hi, n + 1)
        r = (0.5 * (e[1:] - e[:-1])[:, None] * (xg + 1) + e[:-1, None]).ravel()
        w = (0.5 * (e[1:] - e[:-1])[:, None] * wg).ravel()
        return r, w

    total = 0.0 + 0.0j
    if eps == 0:
        # F(r) = r Phi(r) / (r + k); PV int_0^{2k} F/(r - k) = int_0^k [F(k+s) - F(k-s)]/s ds
        sg, sw = panels(0.0, k, 8)
        F = lambda r: r * Phi(r) / (r + k)
        total += np.sum(sw * (F(k + sg) - F(k - sg)) / sg)
        total += 1j * np.pi * Phi(k)[0] / 2
    else:
        # graded panels toward the near-pole region
        br = np.unique(np.concatenate([[0.0, 2 * k], k + np.array([-1, 1]) * np.minimum(k, 4 * eps / k)]))
        for lo, hi in zip(br[:-1], br[1:]):
            r, w = panels(lo, hi, 16)
            total += np.sum(w * r * Phi(r) / (r * r - lam))
    r, w = panels(2 * k, rho_max, 60)
    total += np.sum(w * r * Phi(r) / (r * r - lam))
    return complex(total / (2 * np.pi) ** 2)


def y_resolvent_form(mu, b_spec, d_spec, n_panels: int = 24, order: int = 24):
    """``int int b(y) conj(d(y')) g_mu(y - y') dy dy'`` with the 1-D outgoing
    free resolvent ``g_mu(t) = i exp(i sqrt(mu) |t|) / (2 sqrt(mu))``.

    ``C(t) = int b(y + t) conj(d(y)) dy`` is smooth; integrating
    ``C(t) + C(-t)`` against ``g_mu(t)`` on ``t >= 0`` avoids the kink.
    """
    (cb, wb), (cd, wd) = b_spec, d_spec
    tmax = abs(cb - cd) + wb + wd
    xg, wg = _gl(order)
    edges = np.linspace(0.0, tmax, n_panels + 1)
    t = (0.5 * (edges[1:] - edges[:-1])[:, None] * (xg + 1) + edges[:-1, None]).ravel()
    wt = (0.5 * (edges[1:] - edges[:-1])[:, None] * wg).ravel()
    ys, wy = _bump_nodes(cd, wd, 800)

    def corr(tt):
        return (smooth_bump((ys[None, :] + tt[:, None] - cb) / wb) @ wy)

    C = corr(t) + corr(-t)
    mu = np.atleast_1d(np.asarray(mu, dtype=complex))
    sq = np.sqrt(mu)
    sq = np.where(sq.imag < 0, -sq, sq)
    ker = 1j * np.exp(1j * np.multiply.outer(sq, t)) / (2 * sq[:, None])
    return ker @ (wt * C)


def strip_limit_form(E: float, potential: Potential, phi_spec, psi_spec, eps: float = 0.0,
                     k_max: float = 40.0, n_slices: int = 800) -> complex:
    """``(R_1(E + i eps) phi, psi)`` by separation of variables in frame 1.

    ``(2 pi)^-1 int dk <a, phi_k> conj(<c, phi_k>) Y(E + i eps - k^2)`` where
    ``Y`` is the 1-D free-resolvent form in ``y``.  ``eps = 0`` gives the
    boundary value; the ``|k| = sqrt(E)`` square-root singularity is handled
    by the substitution ``k = sqrt(E) -+ s^2``.
    """
    (ax, ay), (awx, awy) = phi_spec
    (cx, cy), (cwx, cwy) = psi_spec
    xa, wa = _bump_nodes(ax, awx, 400)
    xc, wc = _bump_nodes(cx, cwx, 400)
    s0 = np.sqrt(E)
    xg, wg = _gl(32)

    def integrand(k):
        ph_a = eigenfunctions_batch(potential, xa, k, n_slices)
        ph_c = eigenfunctions_batch(potential, xc, k, n_slices)
        alpha_a = np.conj(ph_a) @ wa
        alpha_c = np.conj(ph_c) @ wc
        Y = y_resolvent_form(E + 1j * eps - k * k, (ay, awy), (cy, cwy))
        return alpha_a * np.conj(alpha_c) * Y / (2 * np.pi)

    total = 0.0 + 0.0j
    # k in (0, s0): k = s0 - s^2 ; k in (s0, 2 s0): k = s0 + s^2
    smax = np.sqrt(s0)
    s = 0.5 * smax * (xg + 1)
    ws = 0.5 * smax * wg
    for sign in (-1.0, 1.0):
        k = s0 + sign * s * s
        jac = 2 * s * ws
        for kk in (k, -k):
            total += np.sum(integrand(kk) * jac)
    edges = np.linspace(2 * s0, k_max, 80)
    for lo, hi in zip(edges[:-1], edges[1:]):
        k = 0.5 * (hi - lo) * (xg + 1) + lo
        w = 0.5 * (hi - lo) * wg
        for kk in (k, -k):
            total += np.sum(integrand(kk) * w)
    return complex(total)
