"""Named batch experiments, their artifacts and replay.

Every experiment writes ``manifest.txt`` before heavy work starts, then CSV
tables, optional kernel snapshots, and ``summary.txt`` with one line per
acceptance check::

    CHECK <name> PASS|FAIL|INCONCLUSIVE <value> <tolerance>

Checks are upper bounds (``value < tolerance``) unless the schema lists them
as lower bounds.
"""
from __future__ import annotations

import configparser
import csv
import platform
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional

import numpy as np
import scipy
from threadpoolctl import threadpool_limits

from . import __version__
from .config import ConfigError, ExperimentConfig, parse_config
from .fits import fit_coordinate_singularity, fit_momentum_singularity, type_a_transform
from .grid import SNAPSHOT_VERSION, SpectralParameter, file_digest, read_snapshot, write_snapshot
from .operators import (MomentumQuadrature, bump_product, frame_coordinates, free_resolvent,
                        g_operator, gamma_dense, gamma_single, gamma_strip_extended,
                        helmholtz_residual, potential_on_grid)
from .oracles import free_limit_form, strip_limit_form
from .pair import (bound_state_scan, fourier_holder_check, ode_residual,
                   rectangular, rectangular_barrier_coefficients, solve_pair, smooth_bump,
                   transfer_coefficients)
from .probe import (DEFAULT_BATTERY_CENTRES, limiting_absorption_probe, test_battery,
                    test_function_regularity)
from .schwartz import OperatorFamily, invert_via_reduction, neumann_series, schwartz_invert
from .split import split_product
from .systems import FreeSystem, PartialSystem, ThreeBodySystem

MANIFEST_VERSION = 1
EXIT_PASS, EXIT_FAIL, EXIT_CONFIG, EXIT_INCONCLUSIVE, EXIT_REPLAY = 0, 1, 2, 3, 4
REPLAY_RTOL = 1e-12

# checks whose value must exceed the tolerance
LOWER_BOUND_CHECKS = {"sign_convention"}


@dataclass
class Check:
    name: str
    status: str  # PASS | FAIL | INCONCLUSIVE
    value: float
    tolerance: float

    def line(self) -> str:
        return f"CHECK {self.name} {self.status} {self.value:.17g} {self.tolerance:.17g}"


def upper(name, value, tol, inconclusive=False) -> Check:
    value = float(value)
    ok = np.isfinite(value) and value < tol
    return Check(name, "PASS" if ok else ("INCONCLUSIVE" if inconclusive else "FAIL"), value, tol)


@dataclass
class RunContext:
    threads: int = 1
    deterministic: bool = False
    seed: int = 0

    @property
    def blas_threads(self) -> int:
        return 1 if self.deterministic else self.threads

    def map(self, fn: Callable, items):
        """Ordered map; concurrent when ``threads > 1``."""
        items = list(items)
        if self.threads > 1 and len(items) > 1:
            with ThreadPoolExecutor(max_workers=self.threads) as pool:
                return list(pool.map(fn, items))
        return [fn(x) for x in items]


# ---------------------------------------------------------------------------
# file helpers
# ---------------------------------------------------------------------------

def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return "%.17g" % v
    return str(v)


def write_csv(path: Path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in r])


def read_summary(path) -> list:
    out = []
    for line in Path(path).read_text().splitlines():
        parts = line.split()
        if len(parts) == 5 and parts[0] == "CHECK":
            out.append(Check(parts[1], parts[2], float(parts[3]), float(parts[4])))
    return out


def write_summary(path, checks):
    Path(path).write_text("".join(c.line() + "\n" for c in checks))


def exit_status(checks) -> int:
    st = {c.status for c in checks}
    if "FAIL" in st:
        return EXIT_FAIL
    if "INCONCLUSIVE" in st:
        return EXIT_INCONCLUSIVE
    return EXIT_PASS


def _manifest(name, cfg: ExperimentConfig, ctx: RunContext, state: str, timings=None, files=None):
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    cp["manifest"] = {
        "format_version": str(MANIFEST_VERSION),
        "snapshot_version": repr(SNAPSHOT_VERSION),
        "experiment": name,
        "state": state,
        "package_version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "seed": str(ctx.seed),
        "threads": str(ctx.threads),
        "deterministic": str(ctx.deterministic).lower(),
        "grid_L": repr(cfg.grid.L),
        "grid_h": repr(cfg.grid.h),
    }
    cp["timings"] = {k: "%.3f" % v for k, v in (timings or {}).items()}
    cp["files"] = dict(files or {})
    for sec, kv in sorted(cfg.sections.items()):
        cp[f"config.{sec}"] = dict(kv)
    return cp


def write_manifest(out: Path, *args, **kw):
    with open(out / "manifest.txt", "w") as fh:
        _manifest(*args, **kw).write(fh)


def read_manifest(path):
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    cp.read(path)
    if "manifest" not in cp:
        raise ValueError(f"{path}: not a manifest")
    return cp


def config_from_manifest(cp) -> str:
    lines = []
    for sec in cp.sections():
        if sec.startswith("config."):
            lines.append(f"[{sec[len('config.'):]}]")
            lines.extend(f"{k} = {v}" for k, v in cp[sec].items())
            lines.append("")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# experiments
# ---------------------------------------------------------------------------

def _potential(cfg: ExperimentConfig, default):
    return cfg.potential if "potential" in cfg.sections else default


def pair_scan(cfg: ExperimentConfig, out: Path, ctx: RunContext) -> list:
    pot = _potential(cfg, rectangular(4.0, 0.5))
    k_min = cfg.get("pair-scan", "k_min", 0.2)
    k_max = cfg.get("pair-scan", "k_max", 5.0)
    count = cfg.get("pair-scan", "k_count", 50, int)
    ks = np.linspace(k_min, k_max, count)
    data = ctx.map(lambda k: solve_pair(pot, k), ks)
    mirror = ctx.map(lambda k: solve_pair(pot, -k), ks)
    if pot.kind == "rectangular":
        ref_t = np.array([rectangular_barrier_coefficients(pot.height, pot.a, k)[0] for k in ks])
        ref_name, ref_tol = "closed_form_t", 1e-6
    else:
        edges, vals = pot.staircase(800)
        ref_t = transfer_coefficients(ks, edges, vals)[0]
        ref_name, ref_tol = "transfer_matrix_t", 1e-4
    rows = []
    for k, d, tr in zip(ks, data, ref_t):
        rows.append((k, abs(d.t) ** 2, abs(d.r) ** 2, d.unitarity_defect, d.t.real, d.t.imag,
                     d.r.real, d.r.imag, abs(d.t - tr)))
    write_csv(out / "pair_scan.csv", ["k", "abs_t2", "abs_r2", "unitarity_defect", "t_re", "t_im",
                                     "r_re", "r_im", "reference_dev"], rows)
    sample = ks[:: max(1, count // 5)]
    resid = max(ode_residual(solve_pair(pot, k)) for k in sample)
    recip = max(abs(d.t - m.t) for d, m in zip(data, mirror))
    bound = bound_state_scan(pot)
    return [upper("unitarity_defect", max(r[3] for r in rows), 1e-8),
            upper(ref_name, max(r[8] for r in rows), ref_tol),
            upper("reciprocity", recip, 1e-8),
            upper("ode_residual", resid, 1e-6),
            upper("bound_states", len(bound), 0.5)]


def _random_family(rng, n, dim, bound):
    gs = []
    for _ in range(n):
        m = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
        gs.append(m * (rng.uniform(0.0, bound) / np.linalg.norm(m, 2)))
    return gs


def schwartz_random(cfg: ExperimentConfig, out: Path, ctx: RunContext) -> list:
    n = cfg.get("schwartz-random", "n", 3, int)
    dim = cfg.get("schwartz-random", "dim", 6, int)
    trials = cfg.get("schwartz-random", "trials", 100, int)
    bound = cfg.get("schwartz-random", "norm_bound", 0.2)
    terms = cfg.get("schwartz-random", "neumann_terms", 8, int)
    rng = np.random.default_rng(ctx.seed)
    families = [_random_family(rng, n, dim, bound) for _ in range(trials)]
    eye = np.eye(dim)

    def one(gs):
        fam = OperatorFamily.from_g(gs)
        gamma, rep = schwartz_invert(fam)
        G = sum(gs)
        eq = np.linalg.norm((eye - G) @ (eye - gamma) - eye, 2)
        neu = neumann_series(fam, terms)
        nd = np.linalg.norm(neu.partial_sums[-1] - gamma, 2)
        red = np.linalg.norm(invert_via_reduction(fam) - gamma, 2)
        return (max(np.linalg.norm(g, 2) for g in gs), neu.block_norm, rep.cond, eq, nd, red)

    res = ctx.map(one, families)
    write_csv(out / "schwartz_random.csv", ["trial", "max_norm_g", "block_norm", "cond_l",
                                           "equivalence_residual", "neumann_dev", "reduction_dev"],
              [(t,) + r for t, r in enumerate(res)])
    eq = np.array([r[3] for r in res])
    return [upper("equivalence_residual", eq.max(), 1e-10),
            upper("equivalence_failures", float(np.sum(eq >= 1e-10)), 0.5),
            upper("neumann_dev", max(r[4] for r in res), 1e-8),
            upper("reduction_dev", max(r[5] for r in res), 1e-10)]


# kernel-build ----------------------------------------------------------------

_KERNEL_FILES = ("R0.bin", "G.bin", "Gamma_spectral.bin", "Gamma_box.bin", "Gamma_extended.bin")


def _kernel_lam(cfg):
    return SpectralParameter(cfg.energies[0], cfg.get("kernel-build", "eps", 0.2))


def kernel_build(cfg: ExperimentConfig, out: Path, ctx: RunContext) -> list:
    pot = _potential(cfg, smooth_bump(1.0, 1.5))
    i = cfg.get("kernel-build", "frame", 1, int)
    lam = _kernel_lam(cfg)
    grid = cfg.grid
    r0 = free_resolvent(grid, lam)
    kernels = {
        "R0.bin": r0,
        "G.bin": g_operator(i, pot, grid, lam, r0),
        "Gamma_spectral.bin": gamma_single(i, pot, grid, lam, MomentumQuadrature.build(lam), r0),
        "Gamma_box.bin": gamma_dense(i, pot, grid, lam, r0),
        "Gamma_extended.bin": gamma_strip_extended(i, pot, grid, lam,
                                                   cfg.get("kernel-build", "extent", 80.0)),
    }
    for fn, k in kernels.items():
        write_snapshot(k, out / fn)
    return kernel_evaluate(cfg, out, out)


def kernel_evaluate(cfg: ExperimentConfig, snap_dir: Path, out: Path) -> list:
    """Checks recomputed purely from stored snapshots plus the config."""
    pot = _potential(cfg, smooth_bump(1.0, 1.5))
    i = cfg.get("kernel-build", "frame", 1, int)
    k = {fn: read_snapshot(snap_dir / fn, fn[:-4]) for fn in _KERNEL_FILES}
    r0 = k["R0.bin"].matrix
    grid, lam = k["R0.bin"].grid, k["R0.bin"].lam
    v = potential_on_grid(pot, grid, i)
    eye = np.eye(grid.size)
    G, Gs, Gb, Ge = (k[f].matrix for f in _KERNEL_FILES[1:])
    write_csv(out / "kernel_stats.csv", ["label", "rows", "cols", "max_abs", "fro_norm", "nonzero_rows"],
              [(f[:-4], m.shape[0], m.shape[1], float(np.abs(m).max()), float(np.linalg.norm(m)),
                int(np.sum(np.any(m != 0, axis=1)))) for f, m in
               ((f, k[f].matrix) for f in _KERNEL_FILES)])
    f = bump_product(grid.nodes, (1.0, -0.5), (4.0, 4.0))
    fd = np.abs(helmholtz_residual(grid, r0 @ f, f, lam)).max()
    ref = np.linalg.norm(Ge)
    return [
        upper("snapshots_finite", float(sum(not k[f].is_finite() for f in _KERNEL_FILES)), 0.5),
        upper("r0_symmetry", np.abs(r0 - r0.T).max() / np.abs(r0).max(), 1e-12),
        upper("r0_helmholtz_residual", fd, 5e-3),
        upper("g_definition", np.abs(G + v[:, None] * r0).max(), 1e-14),
        upper("inversion_identity_box", np.abs((eye - G) @ (eye - Gb) - eye).max(), 1e-10),
        upper("gamma_consistency", np.linalg.norm(Gs - Ge) / ref, 1e-3),
        _lower("sign_convention", np.linalg.norm(-Gs - Ge) / ref, 1.0),
    ]


def _lower(name, value, tol) -> Check:
    return Check(name, "PASS" if value > tol else "FAIL", float(value), tol)


# split-audit -----------------------------------------------------------------

def _split_lam(cfg):
    return SpectralParameter(cfg.energies[0], cfg.get("split-audit", "eps", 0.2))


def split_audit(cfg: ExperimentConfig, out: Path, ctx: RunContext) -> list:
    pot = _potential(cfg, smooth_bump(1.0, 1.5))
    j = cfg.get("split-audit", "j", 1, int)
    k = cfg.get("split-audit", "k", 2, int)
    lam = _split_lam(cfg)
    r0 = free_resolvent(cfg.grid, lam)
    write_snapshot(gamma_dense(j, pot, cfg.grid, lam, r0), out / "Gamma_j.bin")
    write_snapshot(gamma_dense(k, pot, cfg.grid, lam, r0), out / "Gamma_k.bin")
    return split_evaluate(cfg, out, out)


def split_evaluate(cfg: ExperimentConfig, snap_dir: Path, out: Path) -> list:
    pot = _potential(cfg, smooth_bump(1.0, 1.5))
    j = cfg.get("split-audit", "j", 1, int)
    k = cfg.get("split-audit", "k", 2, int)
    gj = read_snapshot(snap_dir / "Gamma_j.bin", f"Gamma{j}")
    gk = read_snapshot(snap_dir / "Gamma_k.bin", f"Gamma{k}")
    grid, lam = gj.grid, gj.lam
    E = lam.E
    sp = split_product(gj, gk, j, k, pot, cfg.chi)
    sP = np.linalg.svd(sp.product, compute_uv=False)
    sB = np.linalg.svd(sp.remainder, compute_uv=False)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(sP > 0, sB / sP, np.nan)
    write_csv(out / "split_singular_values.csv", ["index", "sigma_product", "sigma_remainder", "ratio"],
              [(n, sP[n], sB[n], ratio[n]) for n in range(min(40, sP.size))])

    # far-field profile of one product column along y_j at the strip line nearest x_j = 0
    fr = frame_coordinates(grid, j)
    col = int(np.argmin(np.hypot(grid.nodes[:, 0] - 0.25, grid.nodes[:, 1] - 0.25)))
    x_line = fr[np.argmin(np.abs(fr[:, 0] - 0.5 * grid.h)), 0]
    on_line = np.flatnonzero(np.isclose(fr[:, 0], x_line, atol=1e-9))
    yv, fv = fr[on_line, 1], sp.product[on_line, col]
    write_csv(out / "split_profile.csv", ["y", "re", "im", "abs"],
              [(y, f.real, f.imag, abs(f)) for y, f in sorted(zip(yv, fv), key=lambda t: t[0])])
    start = cfg.chi.T + cfg.chi.w
    fit_rows, alpha_dev, beta_dev, window_ok = [], 0.0, 0.0, True
    for side in (1, -1):
        m = side * yv >= start
        try:
            fit = fit_coordinate_singularity(yv[m], fv[m], E, decay=lam.sqrt.imag)
            note = "ok"
        except ValueError as exc:
            window_ok = False
            note = "diagnostic: " + str(exc).replace(",", ";")
            fit = fit_coordinate_singularity(yv[m], fv[m], E, decay=lam.sqrt.imag, min_periods=0.0)
        alpha_dev = max(alpha_dev, abs(fit.exponent + 0.5))
        beta_dev = max(beta_dev, abs(abs(fit.phase_velocity) / np.sqrt(E) - 1))
        fit_rows.append(("coordinate", side, fit.exponent, fit.phase_velocity, fit.residual,
                         fit.window[0], fit.window[1], fit.n_points, note))

    # momentum transform of the rank-two range function for the same column
    s = np.sqrt(E)
    delta = np.geomspace(0.01, 0.1, 40)
    p = np.sort(np.concatenate([s + delta, s - delta, -s + delta, -s - delta]))
    c_plus, c_minus = sp.right[0, col], sp.right[1, col]
    fhat = c_plus * type_a_transform(p, E, cfg.chi, 1) + c_minus * type_a_transform(p, E, cfg.chi, -1)
    mfit = fit_momentum_singularity(p, fhat, E, resolution=0.0)
    mom_dev = 0.0
    for name, bf in (("momentum_plus", mfit.plus), ("momentum_minus", mfit.minus)):
        if bf.algebraic:
            mom_dev = max(mom_dev, abs(bf.exponent + 0.5))
        fit_rows.append((name, 0, bf.exponent, float("nan"), bf.residual, bf.window[0], bf.window[1],
                         bf.n_points, "singular" if bf.algebraic else "below strength threshold"))
    if not (mfit.plus.algebraic or mfit.minus.algebraic):
        mom_dev = float("inf")
    write_csv(out / "split_fits.csv", ["kind", "side", "exponent", "phase_velocity", "residual",
                                      "window_lo", "window_hi", "n_points", "note"], fit_rows)
    idx = 10
    return [
        upper("split_rank", sp.rank, 2.5),
        upper("split_reconstruction", sp.reconstruction_error(), 1e-10),
        upper("coordinate_window", 0.0 if window_ok else 1.0, 0.5),
        upper("coordinate_exponent", alpha_dev, 0.05),
        upper("phase_velocity", beta_dev, 0.02),
        upper("momentum_exponent", mom_dev, 0.05),
        Check("sv_ratio_index10", "PASS" if ratio[idx] <= 0.5 else "FAIL", float(ratio[idx]), 0.5),
    ]


# limit-probe -------------------------------------------------------------------

def _battery_specs(cfg, section):
    width = cfg.get(section, "width", 4.0)
    return [((cx, cy), (width, width)) for cx, cy in DEFAULT_BATTERY_CENTRES]


def _pairs(raw: str):
    out = []
    for tok in raw.split(","):
        if tok.strip():
            a, b = tok.split(":")
            out.append((int(a), int(b)))
    return out


def _probe_rows(system_name, probes):
    rows = []
    for pr in probes:
        m = pr.values.shape[1]
        for e, vals in zip(pr.eps, pr.values):
            for a in range(m):
                for b in range(vals.shape[1]):
                    rows.append((system_name, pr.E, float(e), a, b, vals[a, b].real, vals[a, b].imag))
    return rows


def _probe_checks(probes, prefix=""):
    checks = []
    for pr in probes:
        tag = f"{prefix}E{pr.E:g}"
        checks.append(Check(f"{tag}_cauchy_ratio", "PASS" if pr.status == "pass" else "INCONCLUSIVE",
                            float(pr.max_ratio), pr.threshold))
        checks.append(upper(f"{tag}_richardson_spread", pr.spread, 0.01,
                            inconclusive=pr.status != "pass"))
    return checks


def _consistency(system, E, phis, eps=1.0):
    lam = SpectralParameter(E, eps)
    a = system.matrix_elements(lam, phis, phis)
    b = system.direct_matrix_elements(lam, phis, phis)
    return float(np.abs(a - b).max() / np.abs(b).max())


def limit_probe(cfg: ExperimentConfig, out: Path, ctx: RunContext) -> list:
    kind = cfg.sections.get("limit-probe", {}).get("system", "partial")
    pot = _potential(cfg, smooth_bump(1.0, 1.5))
    grid = cfg.grid
    specs = _battery_specs(cfg, "limit-probe")
    B = test_battery(grid, width=specs[0][1][0])
    if kind == "free":
        system = FreeSystem(grid)
    elif kind == "partial":
        system = PartialSystem(cfg.get("limit-probe", "frame", 1, int), pot, grid)
    elif kind == "three":
        system = ThreeBodySystem(pot, grid)
    else:
        raise ConfigError(f"field [limit-probe] system: unknown system {kind!r} (free|partial|three)")
    probes = [limiting_absorption_probe(system, E, cfg.eps, B, B, threads=ctx.threads) for E in cfg.energies]
    write_csv(out / "probe_records.csv", ["system", "E", "eps", "phi", "psi", "re", "im"],
              _probe_rows(kind, probes))
    checks = _probe_checks(probes)
    pairs = _pairs(cfg.sections.get("limit-probe", {}).get("oracle_pairs", "0:0,1:3"))
    if kind in ("free", "partial") and pairs:
        rows, worst = [], 0.0

        def oracle(job):
            E, a, b = job
            if kind == "free":
                return free_limit_form(E, specs[a], specs[b])
            return strip_limit_form(E, pot, specs[a], specs[b])

        jobs = [(pr.E, a, b) for pr in probes for a, b in pairs]
        refs = ctx.map(oracle, jobs)
        for (E, a, b), ref in zip(jobs, refs):
            pr = next(p for p in probes if p.E == E)
            lim = pr.limit[a, b]
            dev = abs(lim - ref) / abs(ref)
            worst = max(worst, dev)
            rows.append((kind, E, a, b, lim.real, lim.imag, ref.real, ref.imag, dev))
        write_csv(out / "probe_oracle.csv", ["system", "E", "phi", "psi", "limit_re", "limit_im",
                                            "oracle_re", "oracle_im", "rel_dev"], rows)
        checks.append(upper("oracle_match", worst, 1e-3))
    checks.append(upper("probe_consistency", _consistency(system, cfg.energies[0], B), 1e-6))
    return checks


def full_theorem_audit(cfg: ExperimentConfig, out: Path, ctx: RunContext) -> list:
    pot = _potential(cfg, smooth_bump(1.0, 1.5))
    grid = cfg.grid
    system = ThreeBodySystem(pot, grid)
    specs = _battery_specs(cfg, "full-theorem-audit")
    B = test_battery(grid, width=specs[0][1][0])
    checks = []
    # resolvent residual at eps = 0.2
    lam = SpectralParameter(cfg.energies[0], cfg.get("full-theorem-audit", "eps_residual", 0.2))
    f = bump_product(grid.nodes, (1.0, -0.5), (4.0, 4.0))
    u = system.assemble(lam).apply_resolvent(f)
    res = np.abs(helmholtz_residual(grid, u, f, lam, system.total_potential(), order=8)).max()
    checks.append(upper("resolvent_residual", res, 5e-3))
    # regularity of the inputs
    ph = fourier_holder_check(pot, cfg.mu, cfg.theta)
    checks.append(Check("potential_fourier_holder", {"finite": "PASS", "divergent": "FAIL"}.get(
        ph.status, "INCONCLUSIVE"), float(ph.drift), 0.02))
    stats = [test_function_regularity(col, grid, cfg.mu, cfg.theta)[0] for col in B.T]
    checks.append(upper("battery_fourier_holder", float(sum(s != "finite" for s in stats)), 0.5,
                        inconclusive=True))
    probes = [limiting_absorption_probe(system, E, cfg.eps, B, B, threads=ctx.threads) for E in cfg.energies]
    rem = limiting_absorption_probe(system, cfg.energies[0], cfg.eps, B, B, threads=ctx.threads,
                                    evaluate=system.remainder_elements)
    write_csv(out / "probe_records.csv", ["system", "E", "eps", "phi", "psi", "re", "im"],
              _probe_rows("three", probes) + _probe_rows("remainder", [rem]))
    checks += _probe_checks(probes)
    checks.append(Check("remainder_cauchy_ratio", "PASS" if rem.status == "pass" else "INCONCLUSIVE",
                        float(rem.max_ratio), rem.threshold))
    checks.append(upper("probe_consistency", _consistency(system, cfg.energies[0], B), 1e-6))
    return checks


EXPERIMENTS = {
    "pair-scan": pair_scan,
    "schwartz-random": schwartz_random,
    "kernel-build": kernel_build,
    "split-audit": split_audit,
    "limit-probe": limit_probe,
    "full-theorem-audit": full_theorem_audit,
}

# experiments whose summary can be recomputed from stored kernels
SNAPSHOT_EVALUATORS = {"kernel-build": (kernel_evaluate, _KERNEL_FILES),
                       "split-audit": (split_evaluate, ("Gamma_j.bin", "Gamma_k.bin"))}


@contextmanager
def _limits(ctx: RunContext):
    with threadpool_limits(limits=ctx.blas_threads):
        yield


def run_experiment(name: str, cfg: ExperimentConfig, out, ctx: Optional[RunContext] = None) -> int:
    """Run one experiment into ``out``; returns the exit status."""
    if name not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {name!r}; choose from {sorted(EXPERIMENTS)}")
    ctx = ctx or RunContext(cfg.threads, cfg.deterministic, cfg.seed)
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    write_manifest(out, name, cfg, ctx, "running")
    t0 = time.perf_counter()
    with _limits(ctx):
        checks = EXPERIMENTS[name](cfg, out, ctx)
    elapsed = time.perf_counter() - t0
    write_summary(out / "summary.txt", checks)
    files = {p.name: file_digest(p) for p in sorted(out.iterdir())
             if p.is_file() and p.name != "manifest.txt"}
    write_manifest(out, name, cfg, ctx, "complete", {"total_s": elapsed}, files)
    return exit_status(checks)


@dataclass
class ReplayReport:
    status: int
    messages: list


def _same(a: Check, b: Check) -> bool:
    if a.name != b.name or a.status != b.status:
        return False
    if np.isnan(a.value) and np.isnan(b.value):
        return True
    if np.isinf(a.value) or np.isinf(b.value):
        return a.value == b.value
    return abs(a.value - b.value) <= REPLAY_RTOL * max(abs(a.value), abs(b.value), 1e-300)


def replay(manifest_path, threads: Optional[int] = None) -> ReplayReport:
    """Verify checksums and recompute the summary of a finished run."""
    manifest_path = Path(manifest_path)
    run_dir = manifest_path.parent
    msgs = []
    cp = read_manifest(manifest_path)
    meta = cp["manifest"]
    if int(meta.get("format_version", -1)) != MANIFEST_VERSION:
        return ReplayReport(EXIT_REPLAY, [f"manifest version {meta.get('format_version')} does not "
                                          f"match {MANIFEST_VERSION}"])
    if float(meta.get("snapshot_version", "nan")) != SNAPSHOT_VERSION:
        return ReplayReport(EXIT_REPLAY, [f"snapshot version {meta.get('snapshot_version')} does not "
                                          f"match {SNAPSHOT_VERSION}"])
    if meta.get("state") != "complete":
        return ReplayReport(EXIT_REPLAY, ["run did not complete; nothing to replay"])
    bad = False
    for fn, digest in cp["files"].items():
        p = run_dir / fn
        if not p.exists():
            msgs.append(f"CHECKSUM FAIL {fn} missing")
            bad = True
        elif file_digest(p) != digest:
            msgs.append(f"CHECKSUM FAIL {fn}")
            bad = True
    if bad:
        return ReplayReport(EXIT_REPLAY, msgs)
    name = meta["experiment"]
    cfg = parse_config(config_from_manifest(cp))
    ctx = RunContext(threads if threads else int(meta["threads"]), meta["deterministic"] == "true",
                     int(meta["seed"]))
    stored = read_summary(run_dir / "summary.txt")
    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        if name in SNAPSHOT_EVALUATORS:
            evaluate, _ = SNAPSHOT_EVALUATORS[name]
            with _limits(ctx):
                fresh = evaluate(cfg, run_dir, tmp)
            msgs.append("summary recomputed from stored kernels")
        else:
            run_experiment(name, cfg, tmp, ctx)
            fresh = read_summary(tmp / "summary.txt")
            msgs.append("summary recomputed by re-running from the config echo")
    ok = len(fresh) == len(stored) and all(_same(a, b) for a, b in zip(fresh, stored))
    if not ok:
        for a, b in zip(stored, fresh):
            if not _same(a, b):
                msgs.append(f"MISMATCH {a.name}: stored {a.status} {a.value!r} vs replay {b.status} {b.value!r}")
        if len(fresh) != len(stored):
            msgs.append(f"MISMATCH check count {len(stored)} vs {len(fresh)}")
        return ReplayReport(EXIT_REPLAY, msgs)
    msgs.append(f"REPLAY OK {len(fresh)} checks identical to {REPLAY_RTOL:g}")
    return ReplayReport(EXIT_PASS, msgs)
