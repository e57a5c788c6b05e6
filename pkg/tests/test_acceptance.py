"""Acceptance criteria at desk scale, one test and one report line per criterion."""
import time
from pathlib import Path

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from threebody1d import experiments
from threebody1d.config import load_config, parse_config
from threebody1d.experiments import RunContext, read_summary, run_experiment
from threebody1d.holder import HolderParams, dyadic_offsets, holder_norm, holder_refinement
from threebody1d.pair import rectangular, rectangular_barrier_coefficients, solve_pair
from threebody1d.schwartz import OperatorFamily, invert_via_reduction, neumann_series, schwartz_invert

DESK = Path(experiments.__file__).parent / "data" / "example_desk.ini"


def report(n, ok, detail, status=None):
    status = status or ("PASS" if ok else "FAIL")
    line = f"CRITERION {n} {status} {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def run(name, tmp_path, text=None, **sections):
    cfg = load_config(DESK) if text is None else parse_config(text)
    for sec, kv in sections.items():
        cfg.sections.setdefault(sec.replace("_", "-"), {}).update(kv)
    t0 = time.perf_counter()
    run_experiment(name, cfg, tmp_path, RunContext())
    return {c.name: c for c in read_summary(tmp_path / "summary.txt")}, time.perf_counter() - t0


def test_criterion_1_unitarity():
    t0 = time.perf_counter()
    pot = rectangular(4.0, 0.5)
    ks = np.linspace(0.2, 5.0, 50)
    data = [solve_pair(pot, k) for k in ks]
    defect = max(d.unitarity_defect for d in data)
    dev = max(abs(d.t - rectangular_barrier_coefficients(4.0, 0.5, k)[0]) for d, k in zip(data, ks))
    elapsed = time.perf_counter() - t0
    ok = defect < 1e-8 and dev < 1e-6 and elapsed < 5
    report(1, ok, f"unitarity={defect:.2e}<1e-8 closed_form={dev:.2e}<1e-6 runtime={elapsed:.1f}s<5s")
    assert defect < 1e-8
    assert dev < 1e-6
    assert elapsed < 5


def test_criterion_2_schwartz_equivalence():
    t0 = time.perf_counter()
    rng = np.random.default_rng(0)
    eye = np.eye(6)
    eq, neu, red = [], [], []
    for _ in range(100):
        gs = []
        for _ in range(3):
            m = rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6))
            gs.append(m * (rng.uniform(0.0, 0.2) / np.linalg.norm(m, 2)))
        fam = OperatorFamily.from_g(gs)
        gamma, _ = schwartz_invert(fam)
        eq.append(np.linalg.norm((eye - sum(gs)) @ (eye - gamma) - eye, 2))
        neu.append(np.linalg.norm(neumann_series(fam, 8).partial_sums[-1] - gamma, 2))
        red.append(np.linalg.norm(invert_via_reduction(fam) - gamma, 2))
    elapsed = time.perf_counter() - t0
    n_eq = int(np.sum(np.array(eq) < 1e-10))
    ok = n_eq == 100 and max(neu) < 1e-8 and max(red) < 1e-10 and elapsed < 10
    report(2, ok, f"equivalence {n_eq}/100 (max {max(eq):.1e}<1e-10) neumann8={max(neu):.1e}<1e-8 "
                  f"reduction={max(red):.1e}<1e-10 runtime={elapsed:.1f}s<10s")
    assert n_eq == 100
    assert max(red) < 1e-10
    assert elapsed < 10
    assert max(neu) < 1e-8


def test_criterion_3_gamma_construction(tmp_path):
    c, elapsed = run("kernel-build", tmp_path)
    g, s = c["gamma_consistency"], c["sign_convention"]
    ok = g.status == "PASS" and s.status == "PASS" and elapsed < 600
    report(3, ok, f"spectral_vs_dense={g.value:.2e}<1e-3 opposite_sign={s.value:.2f}>1 "
                  f"runtime={elapsed:.0f}s<600s")
    assert g.value < 1e-3
    assert s.value > 1.0
    assert elapsed < 600


def test_criterion_4_resolvent_residual():
    from threebody1d.grid import GridDescriptor, SpectralParameter
    from threebody1d.operators import bump_product, helmholtz_residual
    from threebody1d.systems import ThreeBodySystem

    cfg = load_config(DESK)
    t0 = time.perf_counter()
    grid = GridDescriptor.preset("desk")
    system = ThreeBodySystem(cfg.potential, grid)
    lam = SpectralParameter(1.0, 0.2)
    f = bump_product(grid.nodes, (1.0, -0.5), (4.0, 4.0))
    u = system.assemble(lam).apply_resolvent(f)
    res = np.abs(helmholtz_residual(grid, u, f, lam, system.total_potential(), order=8)).max()
    elapsed = time.perf_counter() - t0
    ok = res < 5e-3 and elapsed < 900
    report(4, ok, f"residual={res:.2e}<5e-3 runtime={elapsed:.1f}s<900s")
    assert res < 5e-3
    assert elapsed < 900


def test_criterion_5_singular_split(tmp_path):
    c, elapsed = run("split-audit", tmp_path)
    names = ["split_rank", "coordinate_window", "coordinate_exponent", "phase_velocity",
             "momentum_exponent", "sv_ratio_index10"]
    ok = all(c[n].status == "PASS" for n in names) and elapsed < 1200
    report(5, ok, " ".join(f"{n}={c[n].value:.3g}:{c[n].status}" for n in names)
           + f" runtime={elapsed:.0f}s<1200s")
    assert c["split_rank"].value <= 2
    assert c["momentum_exponent"].value < 0.05
    assert elapsed < 1200
    assert c["coordinate_window"].status == "PASS"
    assert c["coordinate_exponent"].value < 0.05
    assert c["phase_velocity"].value < 0.02
    assert c["sv_ratio_index10"].value <= 0.5


def test_criterion_6_limiting_absorption_free_and_one_potential(tmp_path):
    free, t_free = run("limit-probe", tmp_path / "free", limit_probe={"system": "free"})
    one, t_one = run("limit-probe", tmp_path / "one", limit_probe={"system": "partial"})
    elapsed = t_free + t_one
    fo, oo = free["oracle_match"], one["oracle_match"]
    ok = fo.status == "PASS" and oo.status == "PASS" and elapsed < 600
    report(6, ok, f"free={fo.value:.2e}<1e-3 one_potential={oo.value:.2e}<1e-3 runtime={elapsed:.0f}s<600s")
    assert fo.value < 1e-3
    assert oo.value < 1e-3
    assert elapsed < 600


def test_criterion_7_three_potential_limit(tmp_path):
    c, elapsed = run("full-theorem-audit", tmp_path)
    cauchy = [c[f"E{E:g}_cauchy_ratio"] for E in (0.8, 1.0, 1.2)]
    rich = [c[f"E{E:g}_richardson_spread"] for E in (0.8, 1.0, 1.2)]
    detail = (f"max_ratio={max(x.value for x in cauchy):.3f}<0.7 "
              f"richardson_spread={max(x.value for x in rich):.2e}<0.01 runtime={elapsed:.0f}s<7200s")
    if any(x.status == "INCONCLUSIVE" for x in cauchy):
        report(7, False, detail, status="INCONCLUSIVE")
        pytest.skip("minimum supported eps reached before the Cauchy criterion: inconclusive")
    ok = all(x.status == "PASS" for x in cauchy + rich) and elapsed < 7200
    report(7, ok, detail)
    assert all(x.value < 0.7 for x in cauchy)
    assert all(x.value < 0.01 for x in rich)
    assert elapsed < 7200


def test_criterion_8_holder_estimator():
    t0 = time.perf_counter()
    xi = np.linspace(-8, 8, 321)
    zero = holder_norm(np.zeros_like(xi), xi[1] - xi[0], HolderParams(0.25, 0.25, dyadic_offsets(1, 0.05)),
                       origin=xi[0])
    stable = holder_refinement(lambda x: 1 / (1 + x * x), 0.25, 0.25, 8.0, 0.25, levels=4, extend=True)
    cusp = holder_refinement(lambda x: np.abs(x - 0.3) ** 0.5, 0.75, 0.25, 0.25, 0.025, levels=5,
                             center=0.3)
    elapsed = time.perf_counter() - t0
    ok = zero == 0 and stable.drift < 0.02 and cusp.status == "divergent" and elapsed < 60
    report(8, ok, f"zero={zero:g} drift={stable.drift:.2e}<0.02 cusp={cusp.status} runtime={elapsed:.1f}s<60s")
    assert zero == 0
    assert stable.status == "finite" and stable.drift < 0.02
    assert cusp.status == "divergent"
    assert elapsed < 60
