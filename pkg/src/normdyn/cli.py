"""Command-line entry point: ``normdyn <command> [options]``."""

from __future__ import annotations

import argparse
import json
import sys

from .config import PRESETS, ConfigError, load_config


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="configuration file (key = value lines)")
    p.add_argument("--set", dest="overrides", action="append", default=[],
                   metavar="KEY=VALUE", help="override one key; repeatable")
    p.add_argument("--seed", type=int, help="first seed (default: config, then $NORMDYN_SEED)")
    p.add_argument("--runs", type=int, help="number of seeds")
    p.add_argument("--out", help="output directory")
    p.add_argument("--jobs", type=int, help="worker processes")
    p.add_argument("--quiet", action="store_true", help="no progress counter")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="normdyn",
                                 description="A.I. adoption dynamics under decision norms.")
    sub = ap.add_subparsers(dest="command", required=True)
    _common(sub.add_parser("simulate", help="population runs with the configured world"))
    g = sub.add_parser("gradient", help="imitation gradient curves")
    _common(g)
    g.add_argument("--kind", action="append", default=[],
                   help="A.I. kind (repeatable; default: all enabled)")
    _common(sub.add_parser("parochial", help="closed-form parochial PD analysis"))
    p = sub.add_parser("preset", help="regenerate a table or figure")
    p.add_argument("name", choices=[x for x in PRESETS])
    _common(p)
    return ap


def _overrides(args) -> list[str]:
    out = list(args.overrides)
    if args.seed is not None:
        if args.seed < 0:
            raise ConfigError("--seed must be non-negative")
        out.append(f"seed_base={args.seed}")
    if args.runs is not None:
        out.append(f"runs={args.runs}")
    if args.out is not None:
        out.append(f"output={args.out}")
    if args.jobs is not None:
        out.append(f"jobs={args.jobs}")
    if getattr(args, "kind", None):
        out.append(f"kinds={','.join(args.kind)}")
    return out


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    from .experiments import run_preset

    try:
        preset = args.name if args.command == "preset" else None
        cfg = load_config(args.config, _overrides(args), preset=preset)
        name = {"simulate": "simulate", "gradient": "gradient",
                "parochial": "parochial"}.get(args.command, cfg.experiment)
        result = run_preset(cfg, name, progress=not args.quiet)
    except ConfigError as exc:
        print(f"normdyn: config error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"normdyn: error: {exc}", file=sys.stderr)
        return 1
    for f in result.files:
        print(f)
    if not args.quiet:
        print(json.dumps(result.summary["results"], default=str)[:2000], file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
