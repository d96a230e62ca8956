"""Batch command-line front end.

Subcommands mirror the experiments: spectrum, transport, noise-sweep,
gate, gate-optimize.  Each reads a YAML run configuration (falling back
to the packaged default for that experiment) and writes deterministic
CSV/ramp outputs plus a run summary.

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 optimizer non-convergence.
"""
from __future__ import annotations

import argparse
import sys
from importlib import resources
from pathlib import Path

from .config import ConfigError, parse_config, parse_ramp_file
from .runner import run
from .spectral import TrackingError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_NONCONVERGED = 4

_COMMANDS = ("spectrum", "transport", "noise-sweep", "gate", "gate-optimize")


def _default_config_text(experiment: str) -> str:
    name = experiment.replace("-", "_") + ".yaml"
    return resources.files("trapgate.configs").joinpath(name).read_text()


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="trapgate",
        description="Double-well atom transport and Feshbach-gate simulations.")
    sub = parser.add_subparsers(dest="command", required=True)
    for command in _COMMANDS:
        p = sub.add_parser(command, help=f"run the {command} experiment")
        p.add_argument("--config", type=Path, default=None,
                       help="YAML run configuration (default: packaged config)")
        p.add_argument("--out", type=Path, default=None,
                       help="output directory (default: from the configuration)")
        p.add_argument("--threads", type=int, default=1,
                       help="worker threads for noise-sweep cases")
        p.add_argument("--verbose", action="store_true",
                       help="print the run summary to stdout")
        if command == "gate":
            p.add_argument("--ramp", type=Path, default=None,
                           help="ramp file (duration_s B_gauss per line); overrides the config")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.config is not None:
            config_text = args.config.read_text()
            base_dir = args.config.parent
        else:
            config_text = _default_config_text(args.command)
            base_dir = Path.cwd()
    except OSError as exc:
        print(f"error: cannot read configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        external_ramp = None
        if args.command == "gate" and args.ramp is not None:
            external_ramp = parse_ramp_file(args.ramp.read_text(), str(args.ramp))
        config = parse_config(config_text, base_dir=base_dir,
                              external_ramp=external_ramp)
        if config.experiment != args.command:
            raise ConfigError([f"experiment: configuration is for "
                               f"{config.experiment!r}, but the {args.command!r} "
                               f"subcommand was invoked"])
        if external_ramp is not None:
            config.ramp_path = str(args.ramp)
            config.resolved["gate"] = {
                "ramp_path": str(args.ramp),
                "n_segments": int(len(external_ramp.durations)),
                "total_time_s": external_ramp.total_time,
                "n_output_points": config.n_output,
            }
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: cannot read ramp file: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        summary = run(config, config_text, out_dir=args.out,
                      threads=max(1, args.threads), verbose=args.verbose)
    except (TrackingError, RuntimeError, FloatingPointError, ValueError) as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL

    if args.command == "gate-optimize" and not summary.metrics.get("converged", True):
        print(f"warning: optimizer did not converge "
              f"(final cost {summary.metrics['final_cost']:.3e})", file=sys.stderr)
        return EXIT_NONCONVERGED
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
