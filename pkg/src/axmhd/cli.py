"""Command line: ``axmhd {run,check,converge,replay}``.

Exit codes: 0 success, 1 failed check/assertion, 2 configuration error,
3 blow-up guard, 4 I/O error.  ``AXMHD_OUTPUT_DIR`` overrides the output
directory of ``run`` and ``replay``.
"""

from __future__ import annotations

import argparse
import json
import sys

from .config import ConfigError, load_config, parse_config
from .manufactured import CASES
from .persistence import SnapshotError
from .runner import (
    EXIT_BLOWUP,
    EXIT_CHECK_FAILED,
    EXIT_CONFIG,
    EXIT_IO,
    EXIT_OK,
    converge,
    output_dir_for,
    replay,
    run_checks,
    simulate,
)


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="axmhd", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="evolve to t_end and write diagnostics")
    r.add_argument("--config", required=True)
    c = sub.add_parser("check", help="static property suite (no time evolution)")
    c.add_argument("--config", required=True)
    v = sub.add_parser("converge", help="manufactured-solution refinement study")
    v.add_argument("--config", required=True)
    v.add_argument("--case", required=True, choices=CASES)
    y = sub.add_parser("replay", help="continue a run from a checkpoint")
    y.add_argument("--checkpoint", required=True)
    y.add_argument("--t-end", required=True, type=float)
    return p


def _summary(result) -> None:
    print(f"steps {result.steps}, t = {result.state.t:.6g}, records {len(result.records)}")
    for r in result.reports:
        if r.get("asserted"):
            print(f"  {'ok  ' if r['satisfied'] else 'FAIL'} {r['name']}  slack {r.get('slack')}")
    if result.message:
        print(result.message)


def _cmd_run(args) -> int:
    cfg = load_config(args.config)
    out = output_dir_for(cfg)
    result = simulate(cfg, out)
    print(f"output: {out}")
    _summary(result)
    return result.status


def _cmd_check(args) -> int:
    cfg = load_config(args.config)
    results = run_checks(cfg)
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.name}: {r.detail}")
    failed = [r.name for r in results if not r.passed]
    if failed:
        print(f"{len(failed)} check(s) failed: {', '.join(failed)}")
        return EXIT_CHECK_FAILED
    return EXIT_OK


def _cmd_converge(args) -> int:
    cfg = load_config(args.config)
    res = converge(cfg, args.case)
    print(res.table())
    return EXIT_OK if res.passed else EXIT_CHECK_FAILED


def _cmd_replay(args) -> int:
    with open(args.checkpoint, encoding="utf-8") as fh:
        cfg = parse_config(json.load(fh)["config"])
    out = output_dir_for(cfg)
    result = replay(args.checkpoint, args.t_end, out)
    print(f"output: {out}")
    _summary(result)
    return result.status


_COMMANDS = {"run": _cmd_run, "check": _cmd_check, "converge": _cmd_converge, "replay": _cmd_replay}


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, SnapshotError, json.JSONDecodeError, KeyError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())


__all__ = ["main", "EXIT_BLOWUP"]
