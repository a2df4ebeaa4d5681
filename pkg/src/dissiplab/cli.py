"""Command-line entry point: ``dissiplab <subcommand> --config FILE``."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Any, Sequence

from . import __version__
from .config import CASES, load_config
from .errors import ConfigError, IoError
from .pipeline import json_default, run, stages_through

EXIT_PASS, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

# subcommand -> (last stage run, stage printed, table written by --csv)
COMMANDS: dict[str, tuple[str, str | None, str | None]] = {
    "check-hyperbolic": ("hyperbolicity", "hyperbolicity", "speeds"),
    "check-coupling": ("coupling", "coupling", None),
    "compensate": ("compensating", "compensating", None),
    "dispersion": ("dissipativity", "dissipativity", "dispersion"),
    "decay": ("decay", "decay", "decay"),
    "verify-all": ("decay", None, None),
}


def _csv_path(base: str, case: str, n_cases: int) -> Path:
    p = Path(base)
    return p if n_cases == 1 else p.with_name(f"{p.stem}_{case}{p.suffix}")


def _stage_view(report: dict[str, Any], stage: str) -> dict[str, Any]:
    return {name: c["stages"].get(stage) for name, c in report["cases"].items()}


def _summary(report: dict[str, Any]) -> dict[str, Any]:
    return {
        "overall": report["overall"],
        "cases": {name: {s: r["status"] for s, r in c["stages"].items()} for name, c in report["cases"].items()},
    }


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dissiplab",
        description="Verify strict dissipativity of a 1-D compressible flow model with relaxed heat flux.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="run config JSON (or the name of a bundled config)")
        p.add_argument("--output", help="directory for report.json and CSV tables")
        p.add_argument("--csv", help="write this subcommand's table to PATH")
        p.add_argument("--tmax", type=float, help="final time for the decay trace")
        p.add_argument("--seed", type=int, help="seed for sampled checks")
        p.add_argument("--case", choices=CASES, help="override the configured case")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    last, shown, table = COMMANDS[args.command]
    try:
        cfg = load_config(args.config).with_overrides(case=args.case, seed=args.seed, t_max=args.tmax,
                                                      output_dir=args.output)
        write = args.command == "verify-all" or args.output is not None
        report = run(cfg, stages_through(last), write=write)
        if args.csv and table is not None:
            ctxs = report["_contexts"]
            for name, ctx in ctxs.items():
                if table in ctx.tables:
                    path = _csv_path(args.csv, name, len(ctxs))
                    path.parent.mkdir(parents=True, exist_ok=True)
                    ctx.tables[table](path)
    except ConfigError as exc:
        print(f"dissiplab: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (IoError, OSError) as exc:
        print(f"dissiplab: i/o error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    if shown is None:
        out = _summary(report)
        out["files"] = report.get("files", [])
        out["output_dir"] = cfg.output_dir
        print(json.dumps(out, indent=2, sort_keys=True, default=json_default))
    else:
        print(json.dumps(_stage_view(report, shown), indent=2, sort_keys=True, default=json_default))
    return EXIT_PASS if report["overall"] == "pass" else EXIT_FAIL


if __name__ == "__main__":
    raise SystemExit(main())
