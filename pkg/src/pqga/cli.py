"""Command line entry point: ``run``, ``verify`` and ``bounds``."""

from __future__ import annotations

import argparse
import logging
import sys

from .algorithm import RunAborted, SubproblemError
from .harness import (
    EXIT_BOUND,
    EXIT_CONFIG,
    EXIT_OK,
    EXIT_SOLVER,
    ConfigError,
    bound_values,
    load_config,
    run_experiment,
    verify_bounds,
)
from .oracles import OracleError

SOLVER_ERRORS = (RunAborted, SubproblemError, OracleError)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pqga", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run the configured policies and write CSV output")
    run.add_argument("--config", required=True)
    run.add_argument("--seed", type=int, default=None, help="override the configured seed")
    run.add_argument("--out", default=None, help="override the output directory")
    ver = sub.add_parser("verify", help="compare measured regret and violation to the bounds")
    ver.add_argument("--config", required=True)
    bnd = sub.add_parser("bounds", help="print bound values without running")
    bnd.add_argument("--config", required=True)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
        if getattr(args, "seed", None) is not None:
            cfg = cfg.with_seed(args.seed)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        if args.command == "run":
            res = run_experiment(cfg, out_dir=args.out)
            for s in res.summaries:
                print(f"{s['policy']:<11} re_dyn={s['re_dyn']:.6g} re_stat={s['re_stat']:.6g} "
                      f"fbar={s['fbar']:.6g} pbar={s['pbar']:.6g} rbar={s['rbar']:.6g}")
            if res.failed:
                for k, err in res.failed.items():
                    print(f"solver failure in {k}: {err}", file=sys.stderr)
                return EXIT_SOLVER
            return EXIT_OK
        if args.command == "verify":
            checks = verify_bounds(cfg)
            for c in checks:
                print(c.line())
            return EXIT_BOUND if any(c.status == "FAIL" for c in checks) else EXIT_OK
        for line in bound_values(cfg):
            print(line)
        return EXIT_OK
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SOLVER_ERRORS as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
