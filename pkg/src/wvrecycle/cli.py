"""Command-line entry point: ``wvrecycle run`` and ``wvrecycle sweep``."""

from __future__ import annotations

import argparse
import logging
import sys

from .config import ConfigError, parse_config
from .runner import emit_output, run_scenario, run_sweep

log = logging.getLogger("wvrecycle")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wvrecycle",
        description="Power-recycled weak-value deflection simulator.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (("run", "run a single scenario"),
                            ("sweep", "run a parameter sweep")):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="path to the INI-style config file")
        p.add_argument("--out", help="output file (default: [output] path, else stdout)")
        p.add_argument("--format", choices=("csv", "json"), help="output format")
        p.add_argument("--seed", type=int, help="base RNG seed (unsigned 64-bit)")
        p.add_argument("--grid-points", type=int, help="number of transverse grid points")
        p.add_argument("--grid-halfwidth", type=float,
                       help="grid half-width in multiples of sigma (>= 8)")
        if name == "sweep":
            p.add_argument("--jobs", type=int, default=1, help="rows evaluated concurrently")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    try:
        with open(args.config, encoding="utf-8") as fh:
            cfg = parse_config(fh.read())
        cfg = cfg.with_overrides(seed=args.seed, grid_points=args.grid_points,
                                 grid_halfwidth=args.grid_halfwidth, output_format=args.format,
                                 output_path=args.out)
        log.info("mode %s, config hash %s", cfg.mode, cfg.config_hash())
        if args.command == "run":
            if cfg.sweep is not None:
                raise ConfigError("config has a [sweep] section; use the sweep subcommand")
            rows = [run_scenario(cfg)]
        else:
            if cfg.sweep is None:
                raise ConfigError("sweep subcommand needs a [sweep] section")
            if args.jobs < 1:
                raise ConfigError("--jobs must be >= 1")
            rows = run_sweep(cfg, n_jobs=args.jobs)
        text = emit_output(rows, cfg.output_format, cfg.output_path)
    except (OSError, ValueError) as exc:
        print(f"wvrecycle: error: {exc}", file=sys.stderr)
        return 1
    if cfg.output_path is None:
        sys.stdout.write(text)
    else:
        log.info("wrote %d row(s) to %s", len(rows), cfg.output_path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
