import csv
import re
from pathlib import Path

import numpy as np
import pytest

from threebody1d import experiments
from threebody1d.cli import main
from threebody1d.config import parse_config
from threebody1d.experiments import (EXIT_CONFIG, EXIT_FAIL, EXIT_INCONCLUSIVE, EXIT_PASS,
                                     EXIT_REPLAY, Check, exit_status, read_manifest, read_summary)

DATA = Path(experiments.__file__).parent / "data"
LINE = re.compile(r"^CHECK \S+ (PASS|FAIL|INCONCLUSIVE) \S+ \S+$")


def _rows(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


@pytest.fixture(scope="module")
def pair_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("ps")
    status = main(["pair-scan", "--config", str(DATA / "example_pair_scan.ini"), "--out", str(out)])
    return out, status


def test_pair_scan_outputs(pair_run):
    out, status = pair_run
    assert status == EXIT_PASS
    rows = _rows(out / "pair_scan.csv")
    assert len(rows) == 50
    assert {"k", "abs_t2", "abs_r2", "unitarity_defect"} <= set(rows[0])
    assert max(float(r["unitarity_defect"]) for r in rows) < 1e-8
    lines = (out / "summary.txt").read_text().splitlines()
    assert lines and all(LINE.match(x) for x in lines)


def test_manifest_contents(pair_run):
    out, _ = pair_run
    cp = read_manifest(out / "manifest.txt")
    assert cp["manifest"]["state"] == "complete"
    assert cp["manifest"]["experiment"] == "pair-scan"
    assert "numpy" in cp["manifest"] and "total_s" in cp["timings"]
    assert set(cp["files"]) == {"pair_scan.csv", "summary.txt"}
    assert cp["config.potential"]["kind"] == "rectangular"


def test_replay_fresh_run(pair_run, capsys):
    out, _ = pair_run
    assert main(["replay", str(out / "manifest.txt")]) == EXIT_PASS
    assert "REPLAY OK" in capsys.readouterr().out


def test_schwartz_random_equivalence(tmp_path):
    status = main(["schwartz-random", "--n", "3", "--dim", "6", "--trials", "100", "--out", str(tmp_path)])
    checks = {c.name: c for c in read_summary(tmp_path / "summary.txt")}
    assert checks["equivalence_failures"].value == 0
    assert checks["equivalence_residual"].status == "PASS"
    rows = _rows(tmp_path / "schwartz_random.csv")
    assert len(rows) == 100
    assert all(float(r["equivalence_residual"]) < 1e-10 for r in rows)
    assert status == exit_status(checks.values())


def test_empty_energy_list_is_config_error(tmp_path, capsys):
    cfg = tmp_path / "bad.ini"
    cfg.write_text("[spectral]\nenergies =\n")
    assert main(["pair-scan", "--config", str(cfg), "--out", str(tmp_path / "o")]) == EXIT_CONFIG
    err = capsys.readouterr().err
    assert "line 2" in err and "energies" in err


def test_missing_config_file(tmp_path):
    assert main(["pair-scan", "--config", str(tmp_path / "nope.ini")]) == EXIT_CONFIG


def test_unknown_experiment_rejected():
    with pytest.raises(SystemExit) as exc:
        main(["warp-drive"])
    assert exc.value.code == 2


def test_deterministic_outputs_are_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    base = ["schwartz-random", "--trials", "20", "--seed", "11", "--deterministic"]
    main(base + ["--out", str(a), "--threads", "1"])
    main(base + ["--out", str(b), "--threads", "2"])
    assert (a / "schwartz_random.csv").read_bytes() == (b / "schwartz_random.csv").read_bytes()
    assert (a / "summary.txt").read_bytes() == (b / "summary.txt").read_bytes()


def test_seed_changes_results(tmp_path):
    main(["schwartz-random", "--trials", "5", "--seed", "1", "--out", str(tmp_path / "a")])
    main(["schwartz-random", "--trials", "5", "--seed", "2", "--out", str(tmp_path / "b")])
    assert (tmp_path / "a" / "schwartz_random.csv").read_bytes() != \
        (tmp_path / "b" / "schwartz_random.csv").read_bytes()


@pytest.fixture(scope="module")
def kernel_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("kb")
    status = main(["kernel-build", "--config", str(DATA / "example_desk.ini"), "--out", str(out),
                   "--deterministic", "--threads", "1"])
    return out, status


def test_kernel_build_summary(kernel_run):
    out, status = kernel_run
    checks = {c.name: c for c in read_summary(out / "summary.txt")}
    assert checks["gamma_consistency"].status == "PASS"
    assert checks["sign_convention"].status == "PASS"
    assert status == EXIT_PASS
    assert {"R0.bin", "Gamma_spectral.bin"} <= set(read_manifest(out / "manifest.txt")["files"])


def test_replay_from_snapshots_other_thread_count(kernel_run, capsys):
    out, _ = kernel_run
    assert main(["replay", str(out / "manifest.txt"), "--threads", "2"]) == EXIT_PASS
    assert "stored kernels" in capsys.readouterr().out


def test_tampered_snapshot_detected(kernel_run, tmp_path, capsys):
    out, _ = kernel_run
    copy = tmp_path / "copy"
    copy.mkdir()
    for p in out.iterdir():
        (copy / p.name).write_bytes(p.read_bytes())
    raw = bytearray((copy / "G.bin").read_bytes())
    raw[200] ^= 0xFF
    (copy / "G.bin").write_bytes(bytes(raw))
    assert main(["replay", str(copy / "manifest.txt")]) == EXIT_REPLAY
    assert "CHECKSUM FAIL G.bin" in capsys.readouterr().out


def test_manifest_version_mismatch(pair_run, tmp_path, capsys):
    out, _ = pair_run
    for p in out.iterdir():
        (tmp_path / p.name).write_bytes(p.read_bytes())
    m = tmp_path / "manifest.txt"
    m.write_text(m.read_text().replace("format_version = 1", "format_version = 99"))
    assert main(["replay", str(m)]) == EXIT_REPLAY
    assert "version" in capsys.readouterr().out


def test_manifest_written_before_compute(tmp_path, monkeypatch):
    def boom(cfg, out, ctx):
        assert (out / "manifest.txt").exists()
        raise RuntimeError("crash")

    monkeypatch.setitem(experiments.EXPERIMENTS, "pair-scan", boom)
    with pytest.raises(RuntimeError):
        experiments.run_experiment("pair-scan", parse_config(""), tmp_path)
    cp = read_manifest(tmp_path / "manifest.txt")
    assert cp["manifest"]["state"] == "running"


def test_inconclusive_exit_code(tmp_path):
    cfg = tmp_path / "short.ini"
    cfg.write_text("[spectral]\neps = 0.4, 0.2, 0.1\n\n[limit-probe]\nsystem = three\n")
    status = main(["limit-probe", "--config", str(cfg), "--out", str(tmp_path / "o")])
    checks = read_summary(tmp_path / "o" / "summary.txt")
    assert any(c.status == "INCONCLUSIVE" for c in checks)
    assert not any(c.status == "FAIL" for c in checks)
    assert status == EXIT_INCONCLUSIVE


def test_exit_status_mapping():
    assert exit_status([Check("a", "PASS", 0, 1)]) == EXIT_PASS
    assert exit_status([Check("a", "PASS", 0, 1), Check("b", "INCONCLUSIVE", 1, 0.7)]) == EXIT_INCONCLUSIVE
    assert exit_status([Check("a", "FAIL", 2, 1), Check("b", "INCONCLUSIVE", 1, 0.7)]) == EXIT_FAIL


def test_schema_file_documents_every_csv():
    schema = (DATA / "csv_schema.txt").read_text()
    for name in ("pair_scan.csv", "schwartz_random.csv", "kernel_stats.csv", "split_singular_values.csv",
                 "split_profile.csv", "split_fits.csv", "probe_records.csv", "probe_oracle.csv"):
        assert name in schema
