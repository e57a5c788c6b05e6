import numpy as np
import pytest

from threebody1d.grid import SpectralParameter
from threebody1d.operators import bump_product
from threebody1d.oracles import bump_transform, free_limit_form
from threebody1d.pair import zero_potential
from threebody1d import probe
from threebody1d.probe import (analyse_sequence, default_eps_sequence, limiting_absorption_probe,
                               weak_limit_of_remainder)
from threebody1d.systems import FreeSystem, PartialSystem, ThreeBodySystem


def test_default_sequence():
    eps = default_eps_sequence()
    assert np.allclose(eps, 0.4 * 0.5 ** np.arange(7))
    assert len(default_eps_sequence(floor=0.05)) == 4


def test_richardson_exact_for_linear_tail():
    eps = default_eps_sequence()
    vals = (2.0 + 1.0j) + (0.3 - 0.2j) * eps + 0.01 * eps**2
    pr = analyse_sequence(1.0, eps, vals[:, None, None])
    assert pr.status == "pass"
    assert np.allclose(pr.ratios[-3:], 0.5, atol=0.02)
    assert abs(pr.limit[0, 0] - (2 + 1j)) < 1e-4


def test_sequence_validation():
    with pytest.raises(ValueError):
        analyse_sequence(1.0, [0.1, 0.2, 0.05, 0.01, 0.005], np.ones(5))
    with pytest.raises(FloatingPointError):
        analyse_sequence(1.0, default_eps_sequence(), np.full(7, np.nan))


def test_non_cauchy_sequence_is_inconclusive():
    eps = default_eps_sequence()
    vals = np.cos(1 / eps) + 0j
    assert analyse_sequence(1.0, eps, vals).status == "inconclusive"


def test_floor_makes_probe_inconclusive(desk):
    sysm = FreeSystem(desk, eps_min=0.1)
    phi = bump_product(desk.nodes, (0, 0), (4, 4))
    pr = limiting_absorption_probe(sysm, 1.0, default_eps_sequence(), phi, phi)
    assert pr.status == "inconclusive"


def test_battery_is_regular(desk):
    B = probe.test_battery(desk, width=4.0)
    assert B.shape == (desk.size, 8)
    assert probe.test_function_regularity(B[:, 0], desk)[0] == "finite"


@pytest.fixture(scope="module")
def three(desk, bump):
    return ThreeBodySystem(bump, desk)


def test_probe_consistency_three_body(desk, three):
    B = probe.test_battery(desk, width=4.0)
    lam = SpectralParameter(1.0, 1.0)
    a = three.matrix_elements(lam, B, B)
    b = three.direct_matrix_elements(lam, B, B)
    assert np.abs(a - b).max() / np.abs(b).max() < 1e-6


def test_probe_consistency_free_and_dense_partial(desk, bump):
    B = probe.test_battery(desk, width=4.0)[:, :3]
    lam = SpectralParameter(1.0, 1.0)
    for sysm in (FreeSystem(desk), PartialSystem(1, bump, desk, method="dense")):
        a = sysm.matrix_elements(lam, B, B)
        b = sysm.direct_matrix_elements(lam, B, B)
        assert np.abs(a - b).max() / np.abs(b).max() < 1e-6


def test_probe_consistency_spectral_partial(desk, bump):
    # spectral one-potential resolvent against the dense solve of the
    # strip-extended lattice problem
    B = probe.test_battery(desk, width=4.0)[:, :3]
    lam = SpectralParameter(1.0, 1.0)
    sysm = PartialSystem(1, bump, desk)
    a = sysm.matrix_elements(lam, B, B)
    b = sysm.direct_matrix_elements(lam, B, B)
    assert np.abs(a - b).max() / np.abs(b).max() < 1e-6


def test_remainder_vanishes_for_one_potential(desk, bump):
    B = probe.test_battery(desk, width=4.0)[:, :2]
    one = ThreeBodySystem(bump, desk, active=(1,))
    pr = weak_limit_of_remainder(one, 1.0, default_eps_sequence()[:5], B, B)
    assert np.all(pr.values == 0) and np.all(pr.limit == 0)
    free = ThreeBodySystem(zero_potential(), desk)
    assert not np.any(free.remainder_elements(SpectralParameter(1.0, 0.2), B, B))


def test_threaded_probe_matches_serial(desk, three):
    B = probe.test_battery(desk, width=4.0)[:, :2]
    eps = default_eps_sequence()[:5]
    a = limiting_absorption_probe(three, 1.0, eps, B, B, threads=1)
    b = limiting_absorption_probe(three, 1.0, eps, B, B, threads=2)
    assert np.array_equal(a.values, b.values)


def test_bump_transform_matches_fft():
    x = np.linspace(-4, 4, 4001)
    from threebody1d.operators import smooth_bump as bump1d
    f = bump1d((x - 0.5) / 2.0)
    q = np.array([0.0, 0.7, 2.0])
    ref = np.array([np.trapezoid(f * np.exp(-1j * qq * x), x) for qq in q])
    assert np.allclose(bump_transform(q, 0.5, 2.0), ref, atol=1e-8)


def test_free_oracle_at_finite_eps(desk):
    # at eps = 1 the explicit-kernel quadrature and the lattice agree closely
    A = ((0.0, 0.0), (4.0, 4.0))
    Bs = ((1.0, -0.5), (4.0, 4.0))
    phi = bump_product(desk.nodes, *A)
    psi = bump_product(desk.nodes, *Bs)
    lat = FreeSystem(desk).matrix_elements(SpectralParameter(1.0, 1.0), phi[:, None], psi[:, None])[0, 0]
    ref = free_limit_form(1.0, A, Bs, eps=1.0)
    assert abs(lat - ref) / abs(ref) < 1e-3


def test_degenerate_three_body_systems(desk, bump):
    lam = SpectralParameter(1.0, 0.3)
    free = ThreeBodySystem(zero_potential(), desk).assemble(lam)
    assert not np.any(free.gamma)
    assert np.array_equal(free.resolvent_matrix(), free.r0)
    from threebody1d.operators import partial_resolvent

    one = ThreeBodySystem(bump, desk, active=(1,)).assemble(lam)
    R1 = partial_resolvent(1, bump, desk, lam, method="dense")
    assert np.allclose(one.resolvent_matrix(), R1.matrix, atol=1e-12)
