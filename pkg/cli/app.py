"""
Command-line entry point.

    python main.py scatter|sweep|evolve|decompose|epr-demo --config <path>
        [--out <dir>] [--snapshots <every-N>] [--refine <levels>] [--seed <int>]

Exit codes: 0 success, 2 configuration error, 3 physics precondition violated,
4 numerical failure or a failed invariant check.
"""

import argparse
import json
import logging
import sys
import time
from pathlib import Path
from typing import Optional, Sequence

from klein_fv import __version__
from klein_fv.errors import ConfigError, KleinFVError, NumericalError, PreconditionError

from .commands import COMMAND_TYPE_MAP
from .config import ScenarioConfig
from .output import RunManifest, write_json

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_PRECONDITION = 3
EXIT_NUMERICAL = 4

DEFAULT_OUT = "out"
FLAGS = ("snapshots", "refine", "seed")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="klein-fv", description="Klein-Gordon antiparticle scattering, evolution and EPR checks.")
    parser.add_argument("command", choices=list(COMMAND_TYPE_MAP), help="workflow to run")
    parser.add_argument("--config", required=True, help="YAML scenario file")
    parser.add_argument("--out", help="output directory (overrides 'out' in the config)")
    parser.add_argument("--snapshots", type=int, metavar="N", help="evolve: write a snapshot every N steps")
    parser.add_argument("--refine", type=int, metavar="LEVELS", help="epr-demo: commutator refinement levels")
    parser.add_argument("--seed", type=int, help="decompose: seed of the randomized round-trip check")
    parser.add_argument("--log-level", default="WARNING",
                        choices=["DEBUG", "INFO", "WARNING", "ERROR"], help="stderr log level")
    parser.add_argument("-v", "--verbose", action="store_true", help="shorthand for --log-level INFO")
    return parser


def configure_logging(level: str, verbose: bool) -> None:
    if verbose and level == "WARNING":
        level = "INFO"
    logging.basicConfig(level=getattr(logging, level), stream=sys.stderr,
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")


def _flag_overrides(args: argparse.Namespace, command: str) -> dict:
    accepted = COMMAND_TYPE_MAP[command].flag_overrides
    overrides = {}
    for flag in FLAGS:
        value = getattr(args, flag)
        if value is None:
            continue
        if flag not in accepted:
            raise ConfigError(f"--{flag} does not apply to the '{command}' command.")
        overrides[accepted[flag]] = value
    return overrides


def run(config: ScenarioConfig, out_dir: Path) -> int:
    """Runs a validated configuration, writes its outputs and manifest, returns the exit code."""
    command = config.build_command()
    logger.info("Running '%s' into %s", command.name, out_dir)
    started = time.perf_counter()
    result = command.process(out_dir)
    duration = time.perf_counter() - started

    manifest = RunManifest.for_outputs(command.name, config.to_mapping(), __version__, duration,
                                       result.checks, result.summary, result.outputs, out_dir)
    manifest.write(out_dir / "manifest.json")

    if result.report:
        print(result.report)
    for name, passed in result.checks.items():
        print(f"check {name}: {'pass' if passed else 'FAIL'}")
    if not manifest.passed:
        failed = [name for name, passed in result.checks.items() if not passed]
        logger.error("Invariant check(s) failed: %s", ", ".join(failed))
        return EXIT_NUMERICAL
    return EXIT_OK


def exit_code_for(exc: KleinFVError) -> int:
    if isinstance(exc, ConfigError):
        return EXIT_CONFIG
    if isinstance(exc, PreconditionError):
        return EXIT_PRECONDITION
    return EXIT_NUMERICAL


def report_error(exc: KleinFVError, out_dir: Path) -> int:
    """Writes error.json and echoes the same record to stderr."""
    code = exit_code_for(exc)
    record = {"type": type(exc).__name__, "message": str(exc), "exit_code": code}
    if isinstance(exc, NumericalError) and exc.step is not None:
        record["step"] = exc.step
    try:
        write_json(out_dir / "error.json", record)
    except OSError as write_exc:
        logger.warning("Could not write %s: %s", out_dir / "error.json", write_exc)
    print(json.dumps(record), file=sys.stderr)
    return code


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level, args.verbose)
    out_dir = Path(args.out or DEFAULT_OUT)
    try:
        config = ScenarioConfig.load(Path(args.config), args.command)
        out_dir = Path(args.out or config.out or DEFAULT_OUT)
        config = config.with_overrides(**_flag_overrides(args, args.command))
        return run(config, out_dir)
    except KleinFVError as exc:
        return report_error(exc, out_dir)


if __name__ == "__main__":
    sys.exit(main())
