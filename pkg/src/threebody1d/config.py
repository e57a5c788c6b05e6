"""Experiment configuration: flat key-value text with one level of sections.

Example::

    [potential]
    kind = smooth_bump
    height = 1.0
    half_width = 1.5

    [grid]
    preset = desk

    [spectral]
    c1 = 0.5
    c2 = 2.0
    energies = 0.8, 1.0, 1.2
    eps_start = 0.4
    eps_count = 7

    [run]
    seed = 0
"""
from __future__ import annotations

import configparser
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .grid import PRESETS, GridDescriptor
from .pair import Potential, potential_from_mapping
from .split import ChiSpec

DEFAULT_POTENTIAL = {"kind": "smooth_bump", "height": "1.0", "half_width": "1.5", "power": "4"}


class ConfigError(ValueError):
    """Invalid configuration; the message names the line and field."""


def _locate(text: str, section: str, key: Optional[str]) -> int:
    """1-based line of ``key`` inside ``[section]`` (0 if absent)."""
    current = None
    for n, line in enumerate(text.splitlines(), start=1):
        s = line.strip()
        m = re.match(r"^\[(.+)\]$", s)
        if m:
            current = m.group(1).strip()
            if key is None and current == section:
                return n
            continue
        if current == section and key is not None and re.match(rf"^{re.escape(key)}\s*[=:]", s):
            return n
    return 0


@dataclass
class ExperimentConfig:
    """Validated experiment configuration."""

    potential: Potential
    grid: GridDescriptor
    preset: str
    c1: float
    c2: float
    energies: list
    eps: list
    chi: ChiSpec
    mu: float = 0.25
    theta: float = 0.25
    seed: int = 0
    threads: int = 1
    deterministic: bool = False
    out: Optional[str] = None
    sections: dict = field(default_factory=dict)
    text: str = ""

    def section(self, name: str) -> dict:
        return dict(self.sections.get(name, {}))

    def get(self, section: str, key: str, default, cast=float):
        raw = self.sections.get(section, {}).get(key)
        if raw is None:
            return default
        try:
            return cast(raw)
        except (TypeError, ValueError):
            line = _locate(self.text, section, key)
            raise ConfigError(f"line {line}: field [{section}] {key} = {raw!r} is not a valid "
                              f"{getattr(cast, '__name__', 'value')}") from None


def _floats(raw: str) -> list:
    return [float(t) for t in raw.replace(";", ",").split(",") if t.strip()]


def _bool(raw) -> bool:
    s = str(raw).strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ValueError(s)


def parse_config(text: str = "", overrides: Optional[dict] = None) -> ExperimentConfig:
    """Parse and validate configuration text.

    ``overrides`` maps ``(section, key)`` to string values (from CLI flags)
    and is applied after the file.
    """
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        line = getattr(exc, "lineno", 0)
        raise ConfigError(f"line {line}: {exc.message if hasattr(exc, 'message') else exc}") from None
    sections = {s: dict(cp.items(s)) for s in cp.sections()}
    for (sec, key), val in (overrides or {}).items():
        if val is not None:
            sections.setdefault(sec, {})[key] = str(val)

    def fail(sec, key, msg):
        raise ConfigError(f"line {_locate(text, sec, key)}: field [{sec}] {key}: {msg}")

    def num(sec, key, default, cast=float):
        raw = sections.get(sec, {}).get(key)
        if raw is None:
            return default
        try:
            return cast(raw)
        except ValueError:
            fail(sec, key, f"cannot parse {raw!r}")

    # potential
    pspec = sections.get("potential", DEFAULT_POTENTIAL)
    try:
        potential = potential_from_mapping(pspec)
    except ValueError as exc:
        bad = next((k for k in ("kind", "height", "half_width", "power", "x", "v") if k in str(exc)), "kind")
        fail("potential", bad, str(exc))

    # grid
    preset = sections.get("grid", {}).get("preset", "desk")
    if preset == "custom":
        L = num("grid", "L", None)
        h = num("grid", "h", None)
        if L is None or h is None:
            fail("grid", "preset", "custom preset needs L and h")
        try:
            grid = GridDescriptor(L, h)
        except ValueError as exc:
            fail("grid", "h", str(exc))
    elif preset in PRESETS:
        grid = GridDescriptor.preset(preset)
    else:
        fail("grid", "preset", f"unknown preset {preset!r}; known: {sorted(PRESETS)} or custom")

    # spectral box and energies
    c1 = num("spectral", "c1", 0.5)
    c2 = num("spectral", "c2", 2.0)
    if not 0 < c1 < c2:
        fail("spectral", "c1", f"need 0 < c1 < c2, got c1={c1}, c2={c2}")
    raw_e = sections.get("spectral", {}).get("energies", "1.0")
    try:
        energies = _floats(raw_e)
    except ValueError:
        fail("spectral", "energies", f"cannot parse {raw_e!r}")
    if not energies:
        fail("spectral", "energies", "energy list is empty")
    if min(energies) < c1 or max(energies) > c2:
        fail("spectral", "energies", f"energies {energies} leave the box [{c1}, {c2}]")

    raw_eps = sections.get("spectral", {}).get("eps")
    if raw_eps is not None:
        try:
            eps = _floats(raw_eps)
        except ValueError:
            fail("spectral", "eps", f"cannot parse {raw_eps!r}")
    else:
        start = num("spectral", "eps_start", 0.4)
        count = num("spectral", "eps_count", 7, int)
        eps = list(start * 0.5 ** np.arange(count))
    if not eps or any(e <= 0 for e in eps) or any(b >= a for a, b in zip(eps[:-1], eps[1:])):
        fail("spectral", "eps" if raw_eps is not None else "eps_start",
             "eps sequence must be positive and strictly decreasing")

    T = num("split", "T", 0.6 * grid.L)
    w = num("split", "w", 0.1 * grid.L)
    try:
        chi = ChiSpec(T, w)
        chi.check_grid(grid.L)
    except ValueError as exc:
        fail("split", "T", str(exc))

    mu = num("holder", "mu", 0.25)
    theta = num("holder", "theta", 0.25)
    if not (0 < mu < 1 and 0 < theta < 1):
        fail("holder", "mu", "mu and theta must lie in (0, 1)")

    seed = num("run", "seed", 0, int)
    threads = num("run", "threads", 1, int)
    if threads < 1:
        fail("run", "threads", "must be >= 1")
    try:
        deterministic = _bool(sections.get("run", {}).get("deterministic", "false"))
    except ValueError:
        fail("run", "deterministic", "expected true/false")
    out = sections.get("run", {}).get("out")
    return ExperimentConfig(potential, grid, preset, c1, c2, energies, [float(e) for e in eps], chi,
                            mu, theta, seed, threads, deterministic, out, sections, text)


def load_config(path=None, overrides: Optional[dict] = None) -> ExperimentConfig:
    text = Path(path).read_text() if path else ""
    return parse_config(text, overrides)


def dump_sections(cfg: ExperimentConfig) -> str:
    """Echo of the effective sections in the same key-value format."""
    lines = []
    for sec in sorted(cfg.sections):
        lines.append(f"[{sec}]")
        for k in sorted(cfg.sections[sec]):
            lines.append(f"{k} = {cfg.sections[sec][k]}")
        lines.append("")
    return "\n".join(lines)
