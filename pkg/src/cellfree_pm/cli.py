"""Command line entry point: ``sweep``, ``validate`` and ``describe``."""

from __future__ import annotations

import argparse
import logging
import sys

from .config import dump_config, load_config
from .geometry import ConfigurationError


def _split(text: str | None):
    if text is None:
        return None
    # commas inside pm(2) never occur, so a plain split is enough
    return [t.strip() for t in text.split(",") if t.strip()]


def _resolve(args):
    overrides = {"seed": args.seed, "detectors": _split(args.detectors)}
    if getattr(args, "timing", False):
        overrides["record_wall_time"] = True
    return load_config(args.config, **overrides)


def cmd_sweep(args) -> int:
    from .sim import records_to_csv, run_sweep

    cfg = _resolve(args)
    records = run_sweep(cfg, threads=args.threads)
    text = records_to_csv(records, include_timing=cfg.record_wall_time)
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_validate(args) -> int:
    from .validation import run_checks

    results = run_checks(seed=args.seed or 0)
    for res in results:
        print(f"{'PASS' if res.passed else 'FAIL'}  {res.name}: {res.detail}")
    return 0 if all(r.passed for r in results) else 1


def cmd_describe(args) -> int:
    cfg = _resolve(args)
    sys.stdout.write(dump_config(cfg))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cellfree-pm", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", metavar="PATH", help="YAML configuration file")
        p.add_argument("--seed", type=int, metavar="U64", help="master seed (overrides the config)")
        p.add_argument("--detectors", metavar="LIST", help="comma separated, e.g. mrc,pm(2),c_pm(4)")

    p = sub.add_parser("sweep", help="run a configuration and write the FER table as CSV")
    common(p)
    p.add_argument("--out", metavar="PATH", help="CSV destination (default stdout)")
    p.add_argument("--threads", type=int, default=1, metavar="N", help="worker processes")
    p.add_argument("--timing", action="store_true", help="fill the wall_seconds column")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("validate", help="run the oracle and invariant checks")
    p.add_argument("--seed", type=int, default=0, metavar="U64")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("describe", help="print the resolved configuration")
    common(p)
    p.set_defaults(func=cmd_describe)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ConfigurationError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
