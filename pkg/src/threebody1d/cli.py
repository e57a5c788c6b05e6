"""Command-line front end: ``threebody1d <experiment> [flags]`` or ``threebody1d replay MANIFEST``.

Exit codes: 0 all checks pass, 1 a check failed, 2 invalid configuration or
usage, 3 inconclusive (no failures), 4 replay failure (checksum, version or
summary mismatch).
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import ConfigError, load_config
from .experiments import (EXIT_CONFIG, EXPERIMENTS, RunContext, read_summary, replay,
                          run_experiment)
from .grid import PRESETS


def _common(p: argparse.ArgumentParser):
    p.add_argument("--config", type=Path, help="experiment configuration file")
    p.add_argument("--out", type=Path, help="output directory (default: runs/<experiment>)")
    p.add_argument("--preset", choices=sorted(PRESETS), help="grid preset")
    p.add_argument("--threads", type=int, help="cap on worker threads")
    p.add_argument("--deterministic", action="store_true", default=None,
                   help="single-threaded BLAS and ordered reductions")
    p.add_argument("--seed", type=int, help="random seed")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="threebody1d", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in EXPERIMENTS:
        p = sub.add_parser(name, help=f"run the {name} experiment")
        _common(p)
        if name == "schwartz-random":
            p.add_argument("--n", type=int, help="operators per family")
            p.add_argument("--dim", type=int, help="matrix dimension")
            p.add_argument("--trials", type=int, help="number of random families")
    r = sub.add_parser("replay", help="verify and recompute a finished run")
    r.add_argument("manifest", type=Path)
    r.add_argument("--threads", type=int, help="override the recorded thread count")
    return parser


def _overrides(args) -> dict:
    ov = {("grid", "preset"): args.preset,
          ("run", "seed"): args.seed,
          ("run", "threads"): args.threads,
          ("run", "deterministic"): "true" if args.deterministic else None}
    for key in ("n", "dim", "trials"):
        if getattr(args, key, None) is not None:
            ov[("schwartz-random", key)] = getattr(args, key)
    return ov


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "replay":
        if not args.manifest.exists():
            print(f"error: manifest {args.manifest} not found", file=sys.stderr)
            return EXIT_CONFIG
        rep = replay(args.manifest, args.threads)
        for m in rep.messages:
            print(m)
        return rep.status
    try:
        cfg = load_config(args.config, _overrides(args))
        out = args.out or Path(cfg.out or Path("runs") / args.command)
        ctx = RunContext(cfg.threads, cfg.deterministic, cfg.seed)
        status = run_experiment(args.command, cfg, out, ctx)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for c in read_summary(Path(out) / "summary.txt"):
        print(c.line())
    print(f"results in {out} (exit {status})")
    return status


if __name__ == "__main__":
    sys.exit(main())
