"""Command line entry point.

Exit status is 0 when every checked report row passes, 1 when any fails and
2 for usage or configuration errors.
"""

from __future__ import annotations

import argparse
import sys

from . import __version__
from .config import ConfigError, dump_config, load_config, reference_config_path
from .runner import run_scenario, write_outputs
from .report import render_summary

EXIT_PASS, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

SHORTCUTS = {
    "table1": "posture_table",
    "table4": "payload_table",
    "fig5": "torque_profile",
    "fig9": "tip_force_sweep",
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="twistgrip", description="Single-motor twisting gripper simulator.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="run the scenario described by a config file")
    run.add_argument("config")
    _common(run)

    val = sub.add_parser("validate", help="check a config and print it fully resolved")
    val.add_argument("config")

    for name, kind in SHORTCUTS.items():
        sc = sub.add_parser(name, help=f"run the reference {kind} scenario")
        sc.add_argument("--preload", choices=("low", "medium", "high"), default="medium")
        _common(sc)
    return p


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", default=".", help="directory for trace and report files")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--format", choices=("csv", "structured"), default="structured", help="report format")


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {}
    if getattr(args, "seed", None) is not None:
        overrides["scenario.seed"] = str(args.seed)
    try:
        if args.command == "validate":
            cfg = load_config(args.config)
            sys.stdout.write(dump_config(cfg))
            return EXIT_PASS
        if args.command == "run":
            cfg = load_config(args.config, overrides)
        else:
            kind = SHORTCUTS[args.command]
            overrides.update({"scenario.kind": kind, "scenario.id": f"{args.command}-{args.preload}"})
            cfg = load_config(reference_config_path(args.preload), overrides)
    except ConfigError as exc:
        print(f"{exc.source}: invalid configuration", file=sys.stderr)
        for problem in exc.problems:
            print(f"  {problem}", file=sys.stderr)
        return EXIT_USAGE

    result = run_scenario(cfg)
    try:
        paths = write_outputs(result, cfg, args.out, args.format)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    sys.stdout.write(render_summary(result.report))
    for path in paths:
        print(f"wrote {path}")
    return EXIT_PASS if result.passed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
