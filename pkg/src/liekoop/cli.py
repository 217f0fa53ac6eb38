"""Command-line entry point.

Exit codes: 0 when the check passes, 2 when it fails and a report was
written, 1 on any error (bad arguments, bad config, numerical failure).
"""
from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

from .config import COMMANDS, RunConfig, catalog_names, load_catalog, load_config
from .errors import ConfigError, LieKoopError
from .runner import EXIT_ERROR, RunResult, run, run_suite


class _ArgError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _ArgError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="liekoop", description="Verify Lie-group-valued Koopman eigenfunctions.")
    p.add_argument("command", nargs="?", choices=[*COMMANDS, "list"],
                   help="check to run; defaults to the config's run.command")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--system", help="builtin catalog system name")
    src.add_argument("--config", type=Path, help="path to a .cfg system file")
    p.add_argument("--tol", type=float)
    p.add_argument("--collin-tol", type=float)
    p.add_argument("--zero-tol", type=float)
    p.add_argument("--fd-step", type=float)
    p.add_argument("--rk4-step", type=float)
    p.add_argument("--horizon", type=float, help="integration time for the semiconjugacy residual")
    p.add_argument("--seed", type=int)
    p.add_argument("--grid", type=int, help="grid points per coordinate")
    p.add_argument("--random", type=int, help="number of uniform random samples")
    p.add_argument("--out", help="write the JSON report here (default: stdout)")
    p.add_argument("--csv", help="write per-sample rows here")
    p.add_argument("--no-timestamp", action="store_true", help="leave the timestamp field null")
    return p


def _apply_overrides(system, config: RunConfig, args):
    for name in ("tol", "collin_tol", "zero_tol", "fd_step", "rk4_step", "horizon"):
        value = getattr(args, name)
        if value is not None:
            setattr(config, name, value)
    for name in ("out", "csv"):
        if getattr(args, name) is not None:
            setattr(config, name, getattr(args, name))
    if system is not None:
        for name in ("seed", "grid", "random"):
            value = getattr(args, name)
            if value is not None:
                if value < 0:
                    raise ConfigError("must be >= 0", field=f"sampling.{name}")
                setattr(system, name, value)
    config.validate()


def _emit(result: RunResult, config: RunConfig, timestamp: bool):
    text = result.json_text(timestamp=timestamp)
    if config.out:
        Path(config.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    if config.csv:
        Path(config.csv).write_text(result.csv_text(), encoding="utf-8")
    r = result.report
    status = "PASS" if result.passed else "FAIL"
    print(f"{r['command']} {r['system']}: {status}", file=sys.stderr if not config.out else sys.stdout)


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except _ArgError as err:
        print(f"liekoop: error: {err}", file=sys.stderr)
        return EXIT_ERROR
    except SystemExit as exc:  # --help
        return int(exc.code or 0)

    if args.command == "list":
        for name in catalog_names():
            print(name)
        return 0

    try:
        if args.config is not None:
            system, config = load_config(args.config)
        elif args.system is not None:
            system, config = load_catalog(args.system)
        elif args.command == "suite":
            system, config = None, RunConfig()
        else:
            print("liekoop: error: one of --system or --config is required", file=sys.stderr)
            return EXIT_ERROR
        command = args.command or config.command
        config = dataclasses.replace(config, command=command)
        _apply_overrides(system, config, args)

        if system is None:
            systems = [load_catalog(name)[0] for name in catalog_names()]
            for s in systems:
                _apply_overrides(s, RunConfig(), args)
            result = run_suite(systems, config)
        else:
            result = run(command, system, config)
        _emit(result, config, timestamp=not args.no_timestamp)
        return result.exit_code
    except (LieKoopError, ValueError, OSError) as err:
        print(f"liekoop: error: {err}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
