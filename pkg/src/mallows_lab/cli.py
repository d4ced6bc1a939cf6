"""Command line front end: ``mallows-lab run|verify|cache``."""

from __future__ import annotations

import argparse
import logging
import sys

from .gibbs.cache import clear_cache, default_cache_dir
from .runner import run_experiment


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mallows-lab", description="Normal-limit experiments for associated spin chains.")
    p.add_argument("--seed", type=int, default=None, help="override the master seed of the config")
    p.add_argument("--out-dir", default=None, help="override the output directory")
    p.add_argument("--threads", type=int, default=1, help="worker threads for replica sampling")
    p.add_argument("--cache-dir", default=None, help="sample cache location (default: $MALLOWS_LAB_CACHE or XDG cache)")
    p.add_argument("--no-cache", action="store_true", help="always sample afresh and do not store samples")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run an experiment config")
    run.add_argument("config")
    sub.add_parser("verify", help="run the oracle and invariant self-checks")
    cache = sub.add_parser("cache", help="manage the sample cache")
    cache.add_argument("--clear", action="store_true", help="delete every cached ensemble")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.threads < 1:
        print("--threads must be at least 1", file=sys.stderr)
        return 2
    cache_dir = None if args.no_cache else (args.cache_dir or default_cache_dir())
    if args.command == "run":
        return run_experiment(args.config, seed=args.seed, out_dir=args.out_dir, threads=args.threads, cache_dir=cache_dir)
    if args.command == "verify":
        from .verify import verify_suite

        rep = verify_suite()
        print("\n".join(rep.lines()))
        return 0 if rep.passed else 1
    if args.command == "cache":
        if not args.clear:
            print(f"cache directory: {args.cache_dir or default_cache_dir()}")
            return 0
        n = clear_cache(args.cache_dir)
        print(f"removed {n} cached ensemble(s)")
        return 0
    return 2


if __name__ == "__main__":
    sys.exit(main())
