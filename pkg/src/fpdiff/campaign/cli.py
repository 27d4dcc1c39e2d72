"""Command-line entry point: ``fpdiff run|report|validate-config|probe``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Sequence

from ..compiler import (CompilerSpec, ConfigError, Family, Role, ToolchainMissing, guess_family,
                        probe_toolchain)
from .config import MODES, config_problems, load_config
from .report import build_report
from .runner import run_campaign
from .state import CorruptState

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_CONFIG = 2
EXIT_TOOLCHAIN = 3


def _overrides(args: argparse.Namespace) -> dict:
    return {
        "budget": args.budget,
        "campaign_dir": str(Path(args.dir).resolve()) if args.dir else None,
        "mode": args.mode,
        "seed": args.seed,
        "precision": args.precision,
        "workers": args.workers,
    }


def cmd_run(args: argparse.Namespace) -> int:
    cfg = load_config(args.config, _overrides(args))
    report = run_campaign(cfg)
    sys.stdout.write(report.render_summary())
    for phase, secs in report.time.items():
        print(f"time {phase:<12} {secs:8.2f}s")
    print(f"report written to {cfg.campaign_dir / 'report'}")
    return EXIT_OK


def cmd_report(args: argparse.Namespace) -> int:
    root = Path(args.campaign_dir)
    report = build_report(root, diversity=not args.no_diversity)
    out = Path(args.out) if args.out else root / "report"
    report.write(out)
    sys.stdout.write(report.render_summary())
    for table in report.tables.values():
        print()
        sys.stdout.write(table.render_text())
    return EXIT_OK


def cmd_validate(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    problems = config_problems(cfg)
    if problems:
        for p in problems:
            print(f"invalid: {p}", file=sys.stderr)
        return EXIT_CONFIG
    print(f"ok: {cfg.budget} programs, {len(cfg.compilers)} compilers, {len(cfg.levels)} levels, "
          f"mode {cfg.mode}")
    return EXIT_OK


def cmd_probe(args: argparse.Namespace) -> int:
    if args.config:
        specs = list(load_config(args.config).compilers)
    else:
        specs = []
    for path in args.compiler or []:
        family = guess_family(path)
        role = Role.DEVICE if family is Family.NVCC else Role.HOST
        specs.append(CompilerSpec(Path(path).name, path, family, role))
    if not specs:
        raise ConfigError("nothing to probe: give a config or --compiler")
    for spec in specs:
        print(f"{spec.name}\t{spec.family.value}\t{probe_toolchain(spec)}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fpdiff",
                                     description="Differential testing of floating-point compilation.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run or resume a campaign")
    run.add_argument("config")
    run.add_argument("--budget", type=int)
    run.add_argument("--dir", help="campaign directory (overrides config)")
    run.add_argument("--mode", choices=MODES)
    run.add_argument("--seed", type=int)
    run.add_argument("--precision", choices=("FP32", "FP64"))
    run.add_argument("--workers", type=int)
    run.set_defaults(func=cmd_run)

    rep = sub.add_parser("report", help="re-derive all tables from records.jsonl")
    rep.add_argument("campaign_dir")
    rep.add_argument("--out", help="output directory (default: <campaign_dir>/report)")
    rep.add_argument("--no-diversity", action="store_true", help="skip similarity and clone metrics")
    rep.set_defaults(func=cmd_report)

    val = sub.add_parser("validate-config", help="check a config without side effects")
    val.add_argument("config")
    val.set_defaults(func=cmd_validate)

    probe = sub.add_parser("probe", help="print toolchain versions")
    probe.add_argument("config", nargs="?")
    probe.add_argument("--compiler", action="append", help="compiler path (repeatable)")
    probe.set_defaults(func=cmd_probe)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ToolchainMissing as exc:
        print(f"toolchain error: {exc}", file=sys.stderr)
        return EXIT_TOOLCHAIN
    except CorruptState as exc:
        print(f"corrupt campaign state: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except (OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
