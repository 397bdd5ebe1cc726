"""``thermoq`` command-line entry point.

Exit codes: 0 success, 1 config error, 2 numerical-contract violation,
3 I/O error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from importlib import resources

from . import __version__
from .sweep.commands import COMMANDS, RunContext
from .sweep.config import ConfigError, SweepConfig, dump_config, parse_config
from .sweep.output import RunManifest, write_table

log = logging.getLogger("thermoq")

EXIT_OK, EXIT_CONFIG, EXIT_CONTRACT, EXIT_IO = 0, 1, 2, 3
DEFAULT_SEED = 20240611
DEFAULT_SHOTS = 100_000


def _default_workers() -> int:
    raw = os.environ.get("THERMOQ_WORKERS")
    if raw is None:
        return 1
    try:
        return max(1, int(raw))
    except ValueError:
        log.warning("ignoring non-integer THERMOQ_WORKERS=%r", raw)
        return 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="thermoq", description="Thermometry bounds, sweeps and oracle checks.")
    parser.add_argument("--version", action="version", version=f"thermoq {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", metavar="PATH", help="sweep config (default: the bundled one)")
        p.add_argument("--manifest", metavar="PATH", help="re-run from a previous run manifest")
        p.add_argument("--out", metavar="PATH", help=f"output CSV (default: {name}.csv)")
        p.add_argument("--seed", type=int, metavar="U64", help="master seed for Monte Carlo streams")
        p.add_argument("--shots", type=int, metavar="N", help="Monte Carlo shots per estimate")
        p.add_argument("--workers", type=int, metavar="N", default=_default_workers(),
                       help="worker processes/threads (default: $THERMOQ_WORKERS or 1)")
        p.add_argument("--tolerance-scale", type=float, default=1.0, help=argparse.SUPPRESS)
        p.add_argument("-q", "--quiet", action="store_true", help="do not print the report")
    return parser


def _bundled_config(command: str) -> tuple[str, str]:
    name = command.replace("-", "_") + ".ini"
    ref = resources.files("thermoq").joinpath("configs", name)
    return ref.read_text(encoding="utf-8"), f"<bundled {name}>"


def _resolve(args) -> tuple[SweepConfig, RunManifest | None]:
    previous = None
    if args.manifest:
        previous = RunManifest.load(args.manifest)
        if previous.command != args.command:
            raise ConfigError(f"manifest is for {previous.command!r}, not {args.command!r}", source=args.manifest)
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            text, source = fh.read(), args.config
    elif previous is not None:
        text, source = previous.config_text, args.manifest
    else:
        text, source = _bundled_config(args.command)
    return parse_config(text, source), previous


def _int_option(cfg: SweepConfig, key: str) -> int | None:
    raw = cfg.run_option(key)
    if raw is None:
        return None
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"run option {key!r} must be an integer", cfg.run_lines.get(key), cfg.source) from None


def _stem(path: str) -> str:
    return path[:-4] if path.endswith(".csv") else path


def run(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg, previous = _resolve(args)
        command = cfg.run_option("command", args.command)
        if command != args.command:
            raise ConfigError(f"config is for {command!r}, not {args.command!r}", cfg.run_lines.get("command"), cfg.source)
        seed = args.seed
        if seed is None:
            seed = previous.master_seed if previous and previous.master_seed is not None else _int_option(cfg, "seed")
        shots = args.shots
        if shots is None:
            shots = previous.shots if previous and previous.shots is not None else _int_option(cfg, "shots")
        seed = DEFAULT_SEED if seed is None else seed
        shots = DEFAULT_SHOTS if shots is None else shots
        if not (0 <= seed < 2**64):
            raise ConfigError("seed must be an unsigned 64-bit integer", source=cfg.source)
        if shots < 100:
            raise ConfigError("shots must be >= 100", source=cfg.source)
        if args.workers < 1:
            raise ConfigError("workers must be >= 1", source=cfg.source)
        ctx = RunContext(workers=args.workers, seed=seed, shots=shots, tolerance_scale=args.tolerance_scale)
        manifest = RunManifest(__version__, args.command, dump_config(cfg), seed, shots)
        try:
            result = COMMANDS[args.command](cfg, ctx)
        except ValueError as exc:
            raise ConfigError(str(exc), source=cfg.source) from exc
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ArithmeticError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_CONTRACT

    out = args.out or f"{args.command}.csv"
    stem = _stem(out)
    code = EXIT_CONTRACT if result.violations else EXIT_OK
    try:
        manifest.outputs[os.path.basename(out)] = write_table(result.main, out)
        for key, table in result.extra.items():
            path = f"{stem}_{key}.csv"
            manifest.outputs[os.path.basename(path)] = write_table(table, path)
        if result.json_report is not None:
            with open(f"{stem}_report.json", "w", encoding="utf-8") as fh:
                json.dump(result.json_report, fh, indent=2, sort_keys=True)
                fh.write("\n")
            with open(f"{stem}_report.txt", "w", encoding="utf-8") as fh:
                fh.write("\n".join(result.report) + "\n")
        manifest.finish(code)
        manifest.write(f"{stem}.manifest.json")
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO

    if previous is not None:
        for name, digest in previous.outputs.items():
            if name in manifest.outputs and manifest.outputs[name] != digest:
                print(f"warning: {name} differs from the manifest checksum", file=sys.stderr)
    if not args.quiet:
        for line in result.report:
            print(line)
    for v in result.violations:
        print(f"contract violation: {v}", file=sys.stderr)
    return code


def main() -> None:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    sys.exit(run())


if __name__ == "__main__":
    main()
