"""Command-line driver.

    outerplanar <command> --config cfg.json [--seed S] [--out DIR] [--threads K]

Exit status: 0 when every check passes, 2 when a check fails, 1 on error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .experiments import EXPERIMENTS, ExperimentError, load_config, run_experiment, write_report
from .samplers import SamplerError
from .series import SeriesError
from .structures import StructureError

log = logging.getLogger("outerplanar")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="outerplanar",
                                description="Random outerplanar maps: analysis and experiments.")
    p.add_argument("command", choices=EXPERIMENTS)
    p.add_argument("--config", required=True, help="JSON experiment config")
    p.add_argument("--seed", type=int, default=None, help="master seed (overrides the config)")
    p.add_argument("--out", default=None, help="output directory (default: config 'out' or ./out/<command>)")
    p.add_argument("--threads", type=int, default=1, help="worker processes for replicas")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args.config, args.command, args.seed, args.out)
        out = cfg.out or f"out/{args.command}"
        rep = run_experiment(cfg, threads=max(1, args.threads))
        write_report(rep, out)
    except (ExperimentError, SeriesError, SamplerError, StructureError, OSError,
            json.JSONDecodeError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for name, c in rep.checks.items():
        print(f"{'PASS' if c['passed'] else 'FAIL'} {name}: value={c['value']} target={c['target']}")
    print(f"wrote {out}/report.json and {out}/rows.csv")
    return 0 if rep.passed else 2


if __name__ == "__main__":
    sys.exit(main())
