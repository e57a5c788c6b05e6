import pytest

from threebody1d.config import ConfigError, load_config, parse_config

BASE = """[potential]
kind = rectangular
height = 4.0
half_width = 0.5

[grid]
preset = desk

[spectral]
c1 = 0.5
c2 = 2.0
energies = 0.8, 1.0, 1.2
eps_start = 0.4
eps_count = 7
"""


def test_defaults():
    cfg = parse_config("")
    assert cfg.grid.L == 8.0 and cfg.grid.h == 0.5
    assert cfg.energies == [1.0]
    assert len(cfg.eps) == 7 and cfg.eps[0] == 0.4
    assert (cfg.chi.T, cfg.chi.w) == (pytest.approx(4.8), pytest.approx(0.8))
    assert cfg.seed == 0 and not cfg.deterministic


def test_full_file(tmp_path):
    p = tmp_path / "c.ini"
    p.write_text(BASE + "\n[run]\nseed = 7\ndeterministic = yes\n")
    cfg = load_config(p)
    assert cfg.potential.kind == "rectangular" and cfg.potential.height == 4.0
    assert cfg.energies == [0.8, 1.0, 1.2]
    assert cfg.seed == 7 and cfg.deterministic


def _err(text):
    with pytest.raises(ConfigError) as exc:
        parse_config(text)
    return str(exc.value)


def test_empty_energy_list_names_line_and_field():
    msg = _err(BASE.replace("energies = 0.8, 1.0, 1.2", "energies ="))
    assert "line 12" in msg and "energies" in msg


def test_energy_outside_box():
    assert "energies" in _err(BASE.replace("c1 = 0.5", "c1 = 0.9"))


def test_box_ordering():
    assert "c1" in _err(BASE.replace("c2 = 2.0", "c2 = 0.1"))


def test_unknown_preset():
    msg = _err(BASE.replace("preset = desk", "preset = galactic"))
    assert "line 7" in msg and "preset" in msg


def test_custom_grid():
    cfg = parse_config(BASE.replace("preset = desk", "preset = custom\nL = 4\nh = 0.25"))
    assert cfg.grid.L == 4.0 and cfg.grid.h == 0.25
    assert "custom" in _err(BASE.replace("preset = desk", "preset = custom"))


def test_bad_number_names_line():
    msg = _err(BASE.replace("c2 = 2.0", "c2 = two"))
    assert "line 11" in msg and "c2" in msg


def test_bad_potential():
    msg = _err(BASE.replace("kind = rectangular", "kind = coulomb"))
    assert "potential" in msg and "line 2" in msg


def test_eps_sequence_checks():
    assert "eps" in _err(BASE + "eps = 0.1, 0.2, 0.05\n")
    cfg = parse_config(BASE + "eps = 0.4, 0.2, 0.1, 0.05, 0.025\n")
    assert cfg.eps == [0.4, 0.2, 0.1, 0.05, 0.025]


def test_chi_must_fit():
    assert "split" in _err(BASE + "\n[split]\nT = 7.5\nw = 1.0\n")


def test_syntax_error_has_line():
    msg = _err("[grid]\npreset desk\n")
    assert "line" in msg


def test_overrides():
    cfg = parse_config(BASE, {("run", "seed"): 5, ("grid", "preset"): "default", ("run", "threads"): None})
    assert cfg.seed == 5 and cfg.grid.L == 15.0 and cfg.threads == 1


def test_experiment_section_access():
    cfg = parse_config(BASE + "\n[schwartz-random]\ntrials = ten\n")
    with pytest.raises(ConfigError, match="trials"):
        cfg.get("schwartz-random", "trials", 100, int)
    assert cfg.get("schwartz-random", "n", 3, int) == 3
