"""Command-line interface: one subcommand per scenario, plus ``run`` which
reads the scenario name from the config file.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import logging
import sys

import yaml

from .config import SCENARIOS, ConfigError, apply_override, parse_config
from .dynamics import PropagationError, StiffnessError
from .detector import FitError
from .scenarios import run_scenario

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3


def _add_common(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--config", required=True, help="path to the YAML scenario document")
    sp.add_argument("--output", default=None, help="override the output directory")
    sp.add_argument("--seed", type=int, default=None, help="override the random seed")
    sp.add_argument("--jobs", type=int, default=None, help="worker processes (0 = all cores)")
    sp.add_argument(
        "--override",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="dotted-path config override, e.g. drive.pump_power_dbm='-65 dBm'",
    )


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="spdsim",
        description="transmon-converter simulations and detector-efficiency extraction",
    )
    sub = ap.add_subparsers(dest="command", required=True)
    for name in SCENARIOS + ("run",):
        sp = sub.add_parser(name, help=f"run the {name} scenario" if name != "run" else "run the scenario named in the config")
        _add_common(sp)
    return ap


def _load_config(args) -> "ScenarioConfig":
    with open(args.config) as f:
        text = f.read()
    raw = yaml.safe_load(text) or {}
    if not isinstance(raw, dict):
        raise ConfigError("top level must be a mapping")
    if args.command != "run":
        raw["scenario"] = args.command
    if args.output is not None:
        raw["output_dir"] = args.output
    if args.seed is not None:
        raw["seed"] = args.seed
    if args.jobs is not None:
        raw["jobs"] = args.jobs
    for ov in args.override:
        if "=" not in ov:
            raise ConfigError(f"--override expects KEY=VALUE, got {ov!r}")
        key, value = ov.split("=", 1)
        apply_override(raw, key, value)
    return parse_config(yaml.safe_dump(raw))


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        cfg = _load_config(args)
    except (ConfigError, OSError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        outdir = run_scenario(cfg)
    except (PropagationError, StiffnessError, FitError, RuntimeError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    print(outdir)
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
