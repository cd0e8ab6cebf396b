"""Command line: ``verify`` a scenario, list the ``catalog``."""
from __future__ import annotations

import argparse
import sys
from typing import Optional, Sequence

from .catalog import CATALOG, UnknownCheckError, run_scenario
from .config import ConfigError, GateError, bundled_scenarios, load_config
from .report import VerificationReport, emit_report
from .starprod import InvariantError


def run_config(path, checks=None, seed: Optional[int] = None) -> VerificationReport:
    """Load, gate and verify one config file or bundled scenario."""
    return run_scenario(load_config(path), checks, seed)


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dqgroupoid", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    v = sub.add_parser("verify", help="run the identity checks of a scenario")
    v.add_argument("config", help="path to a JSON config, or a bundled scenario name")
    v.add_argument("--format", choices=("human", "machine"), default="human")
    v.add_argument("--checks", help="comma separated check ids (default: from the config)")
    v.add_argument("--seed", type=int, help="override the config seed")
    v.add_argument("--no-timing", action="store_true", help="omit timings from machine output")
    sub.add_parser("catalog", help="list check ids and tags")
    sub.add_parser("scenarios", help="list bundled scenarios")
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    if args.command == "catalog":
        w = max(len(c.id) for c in CATALOG)
        for c in CATALOG:
            print(f"{c.id:<{w}}  {c.paper_tag:<12}  {c.statement}")
        return 0
    if args.command == "scenarios":
        print("\n".join(bundled_scenarios()))
        return 0
    checks = [c.strip() for c in args.checks.split(",") if c.strip()] if args.checks else None
    try:
        report = run_config(args.config, checks, args.seed)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except InvariantError as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return 2
    except GateError as exc:
        print(f"rejected: {exc}", file=sys.stderr)
        return 2
    except UnknownCheckError as exc:
        print(f"unknown check id {exc}", file=sys.stderr)
        return 2
    sys.stdout.write(emit_report(report, args.format, timing=not args.no_timing))
    return report.exit_code()


if __name__ == "__main__":
    sys.exit(main())
