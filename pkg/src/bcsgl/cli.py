"""Command line entry point ``bcsgl``."""

from __future__ import annotations

import argparse
import logging
import sys
from importlib import resources

from .errors import BcsglError, ConfigError
from .pipeline import STAGES, exit_code, export, parse_config, run_pipeline

COMMANDS = {
    "tc": "critical temperature and pair state",
    "coeffs": "GL coefficients (runs tc first)",
    "gl-min": "minimize the GL functional with the configured fields",
    "verify-1d": "lattice consistency checks (exact identity, entropy bound, free fermions)",
    "sweep": "lattice BCS vs GL comparison over the configured h_list",
    "run": "all stages",
}


def bundled_config_path():
    return resources.files("bcsgl") / "data" / "example_1d.json"


def _parser():
    p = argparse.ArgumentParser(prog="bcsgl", description="BCS critical temperature, GL coefficients and checks")
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")
    for name, help_text in COMMANDS.items():
        s = sub.add_parser(name, help=help_text)
        s.add_argument("--config", help="JSON config file (default: bundled 1D example)")
        s.add_argument("--only", choices=STAGES, help="record only this stage")
        s.add_argument("--out", help="output directory (overrides output_dir in the config)")
        s.add_argument("--seed", type=int, help="random seed (overrides the config)")
        s.add_argument("--format", choices=("json", "csv", "both"), default="both")
        s.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None):
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.config is None:
            with resources.as_file(bundled_config_path()) as path:
                cfg = parse_config(path)
        else:
            cfg = parse_config(args.config)
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError("seed must be non-negative", ["seed: must be >= 0"])
            cfg = cfg.model_copy(update={"seed": args.seed})
        record = run_pipeline(cfg, args.command, args.only)
    except BcsglError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    out = args.out or cfg.output_dir
    try:
        files = export(record, out, args.format)
    except OSError as exc:
        print(f"error: cannot write to {out}: {exc}", file=sys.stderr)
        return 2
    sys.stdout.write((files[-1]).read_text())
    if record["error"] is not None:
        print(f"error in stage {record['error']['stage']}: {record['error']['message']}", file=sys.stderr)
    return exit_code(record)


if __name__ == "__main__":
    sys.exit(main())
