import numpy as np
import pytest
from scipy import special

from threebody1d.grid import GridDescriptor, SpectralParameter
from threebody1d.operators import (MomentumQuadrature, QuadratureError, bump_product, fd_laplacian,
                                   free_resolvent, g_operator, gamma_dense, gamma_single,
                                   gamma_strip_extended, helmholtz_residual, lattice_green,
                                   partial_resolvent, potential_on_grid, strip_nodes)
from threebody1d.pair import zero_potential


@pytest.fixture(scope="module")
def gammas(desk, bump, lam02, r0_desk):
    return {
        "spectral": gamma_single(1, bump, desk, lam02, MomentumQuadrature.build(lam02), r0_desk).matrix,
        "extended": gamma_strip_extended(1, bump, desk, lam02).matrix,
        "box": gamma_dense(1, bump, desk, lam02, r0_desk).matrix,
    }


def test_free_resolvent_symmetric_and_finite(r0_desk):
    m = r0_desk.matrix
    assert np.array_equal(m, m.T)
    assert r0_desk.is_finite()


def test_off_diagonal_is_hankel():
    lam = SpectralParameter(1.0, 0.2)
    h = 0.5
    v = lattice_green(np.array([3]), np.array([4]), lam, h)[0]
    assert np.isclose(v, h * h * 0.25j * special.hankel1(0, lam.sqrt * 2.5))


def test_free_resolvent_inverts_helmholtz(desk, lam02, r0_desk):
    f = bump_product(desk.nodes, (1.0, -0.5), (4.0, 4.0))
    res = helmholtz_residual(desk, r0_desk.apply(f), f, lam02)
    assert np.abs(res).max() < 5e-3


def test_diagonal_rule_converges():
    # with the corrected diagonal the Nystrom rule converges at high order
    lam = SpectralParameter(1.0, 0.2)
    f = lambda g: np.exp(-np.sum(g.nodes**2, axis=1))
    errs = []
    for h in (0.5, 0.25):
        g = GridDescriptor(6.0, h)
        u = free_resolvent(g, lam).apply(f(g))
        errs.append(np.abs(helmholtz_residual(g, u, f(g), lam)).max())
    assert errs[1] < errs[0] / 4


def test_max_nodes_guard(desk, lam02):
    with pytest.raises(MemoryError):
        free_resolvent(desk, lam02, max_nodes=100)


def test_g_sign_and_support(desk, bump, lam02, r0_desk):
    G = g_operator(1, bump, desk, lam02, r0_desk).matrix
    v = potential_on_grid(bump, desk, 1)
    assert np.array_equal(G, -v[:, None] * r0_desk.matrix)
    off = np.setdiff1d(np.arange(desk.size), strip_nodes(bump, desk, 1))
    assert not np.any(G[off])


def test_box_inversion_identity(desk, bump, lam02, r0_desk, gammas):
    G = g_operator(1, bump, desk, lam02, r0_desk).matrix
    eye = np.eye(desk.size)
    assert np.abs((eye - G) @ (eye - gammas["box"]) - eye).max() < 1e-10


def test_spectral_kernel_matches_extended_solve(gammas):
    ref = np.linalg.norm(gammas["extended"])
    assert np.linalg.norm(gammas["spectral"] - gammas["extended"]) / ref < 1e-3
    # the opposite sign would be off by a factor two
    assert np.linalg.norm(-gammas["spectral"] - gammas["extended"]) / ref > 1.9


def test_box_truncation_is_visible(gammas):
    ref = np.linalg.norm(gammas["extended"])
    assert np.linalg.norm(gammas["box"] - gammas["extended"]) / ref > 1e-3


def test_zero_potential_gives_zero_gamma(desk, lam02, r0_desk):
    z = zero_potential()
    assert not np.any(gamma_dense(1, z, desk, lam02, r0_desk).matrix)
    assert np.array_equal(partial_resolvent(1, z, desk, lam02, r0=r0_desk).matrix, r0_desk.matrix)


def test_dense_partial_resolvent_solves_pde(desk, bump, lam02, r0_desk):
    R1 = partial_resolvent(1, bump, desk, lam02, method="dense", r0=r0_desk)
    f = bump_product(desk.nodes, (1.0, -0.5), (4.0, 4.0))
    res = helmholtz_residual(desk, R1.apply(f), f, lam02, potential_on_grid(bump, desk, 1))
    assert np.abs(res).max() < 5e-3


def test_quadrature_floor():
    with pytest.raises(QuadratureError):
        MomentumQuadrature.build(SpectralParameter(1.0, 1e-6))
    q = MomentumQuadrature.build(SpectralParameter(1.0, 0.01))
    # integrates a smooth function exactly enough
    assert np.isclose(np.sum(q.weights * np.exp(-q.nodes)), 1.0, atol=1e-12)


@pytest.mark.parametrize("order", [2, 4, 6, 8])
def test_fd_stencils_converge(order):
    errs = []
    for h in (0.2, 0.1):
        x = np.arange(-3, 3 + 1e-9, h)
        X, Y = np.meshgrid(x, x, indexing="ij")
        u = np.sin(X) * np.cos(2 * Y)
        m = order // 2
        err = fd_laplacian(u, h, order) + 5 * u[m:-m, m:-m]
        errs.append(np.abs(err).max())
    assert np.log2(errs[0] / errs[1]) > order - 0.5


def test_far_field_decay_of_kernel():
    lam = SpectralParameter(1.0, 0.2)
    d = np.arange(20, 200)
    v = lattice_green(d, np.zeros_like(d), lam, 0.5)
    r = 0.5 * d
    slope = np.polyfit(np.log(r), np.log(np.abs(v)) + lam.sqrt.imag * r, 1)[0]
    assert abs(slope + 0.5) < 0.01


def test_g_norm_decreases_with_eps(desk, bump):
    norms = []
    for eps in (0.1, 0.4, 1.6):
        lam = SpectralParameter(1.0, eps)
        norms.append(np.linalg.norm(g_operator(1, bump, desk, lam).matrix, 2))
    assert norms[0] > norms[1] > norms[2]


def test_separated_oracle_matches_spectral_resolvent(desk, bump, lam02):
    from threebody1d.oracles import strip_limit_form

    A = ((0.0, 0.0), (4.0, 4.0))
    B = ((1.0, -0.5), (4.0, 4.0))
    phi, psi = bump_product(desk.nodes, *A), bump_product(desk.nodes, *B)
    R1 = partial_resolvent(1, bump, desk, lam02, quad=MomentumQuadrature.build(lam02))
    val = R1.form(phi, psi)
    ref = strip_limit_form(1.0, bump, A, B, eps=0.2)
    assert abs(val - ref) / abs(ref) < 1e-3


def test_resolvent_identity_box_model(desk, bump, lam02, r0_desk):
    R1 = partial_resolvent(1, bump, desk, lam02, method="dense", r0=r0_desk).matrix
    v = potential_on_grid(bump, desk, 1)
    R0 = r0_desk.matrix
    res = R1 - R0 + R0 @ (v[:, None] * R1)
    assert np.abs(res).max() / np.abs(R0).max() < 1e-4


def test_compose_examples(desk, lam02, gammas, rng):
    from threebody1d.grid import GridKernel, compose

    g1 = GridKernel(gammas["box"], desk, "G1", lam02)
    assert not np.any(compose(g1, GridKernel.zero(desk, lam02)).matrix)
    a = GridKernel(rng.standard_normal((desk.size, desk.size)) + 0j, desk, "a", lam02)
    ab = compose(a, g1)
    X = rng.standard_normal((desk.size, 50))
    assert np.allclose(ab.matrix @ X, a.matrix @ (g1.matrix @ X), rtol=1e-12, atol=1e-12)
