"""Command-line entry point.

Exit codes: 0 success, 2 configuration error, 3 runtime failure.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import os
import statistics
import sys

from .harness import (ALGORITHMS, AXES, ConfigError, ExperimentConfig, brute_check,
                      heldout_evaluate, load_cascades, run_experiment, sweep, write_assets,
                      write_results)

EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def _config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if getattr(args, "workers", None) is not None:
        changes["workers"] = args.workers
    if getattr(args, "algo", None):
        changes["algorithms"] = [args.algo]
    return dataclasses.replace(cfg, **changes).validate()


def cmd_generate(args):
    cfg = _config(args)
    manifest = write_assets(cfg, args.out, cascades_per_product=args.cascades)
    print(f"wrote {len(manifest['networks'])} networks to {args.out}")


def cmd_optimize(args):
    cfg = _config(args)
    rows, reports = run_experiment(cfg)
    write_results(args.out, "optimize", cfg, rows, reports)
    for r in rows:
        print(f"{r['algorithm']:>12}  value {r['objective']:.4f}  pairs {r['size']}")


def cmd_sweep(args):
    cfg = _config(args)
    axis = args.axis or (cfg.sweep or {}).get("axis")
    if axis not in AXES:
        raise ConfigError(f"--axis must be one of {', '.join(AXES)}")
    rows, reports = sweep(cfg, axis)
    write_results(args.out, f"sweep_{axis}", cfg, rows, reports)
    print(f"wrote {len(rows)} rows to {os.path.join(args.out, f'sweep_{axis}.csv')}")


def cmd_brute_check(args):
    rows = brute_check(args.instances, seed=args.seed or 0)
    os.makedirs(args.out, exist_ok=True)
    with open(os.path.join(args.out, "brute_check.csv"), "w") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    for mode in ("uniform", "knapsack"):
        ratios = [r["ratio"] for r in rows if r["mode"] == mode]
        bad = sum(1 for r in rows if r["mode"] == mode and not r["ok"])
        print(f"{mode:>8}: {len(ratios)} instances, min ratio {min(ratios):.3f}, "
              f"median {statistics.median(ratios):.3f}, violations {bad}")
    if any(not r["ok"] for r in rows):
        return EXIT_RUNTIME


def cmd_evaluate(args):
    with open(args.allocation) as fh:
        data = json.load(fh)
    if isinstance(data, dict) and "reports" in data:
        allocations = {r["algorithm"]: r["selected"] for r in data["reports"]}
    elif isinstance(data, dict) and "selected" in data:
        allocations = {data.get("algorithm", "allocation"): data["selected"]}
    else:
        allocations = {"allocation": data}
    cascades = load_cascades(args.cascades)
    for name, sel in allocations.items():
        print(f"{name}: {heldout_evaluate([tuple(z) for z in sel], cascades)!r}")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="budgetmax", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, out=True):
        sp.add_argument("--config", help="experiment JSON file")
        sp.add_argument("--seed", type=int)
        if out:
            sp.add_argument("--out", default="results", help="output directory")

    sp = sub.add_parser("generate", help="write synthetic networks and an asset manifest")
    common(sp)
    sp.add_argument("--cascades", type=int, default=0, metavar="N",
                    help="also simulate N held-out cascades per product")
    sp.set_defaults(func=cmd_generate)

    sp = sub.add_parser("optimize", help="single run of the configured algorithms")
    common(sp)
    sp.add_argument("--algo", choices=ALGORITHMS)
    sp.set_defaults(func=cmd_optimize)

    sp = sub.add_parser("sweep", help="vary one parameter and tabulate results")
    common(sp)
    sp.add_argument("--axis", choices=AXES)
    sp.add_argument("--workers", type=int)
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("brute-check", help="greedy vs brute force on small random instances")
    common(sp)
    sp.add_argument("--instances", type=int, default=50)
    sp.set_defaults(func=cmd_brute_check)

    sp = sub.add_parser("evaluate", help="held-out influence of an allocation")
    sp.add_argument("--allocation", required=True, help="report JSON or a list of [product, user] pairs")
    sp.add_argument("--cascades", required=True)
    sp.set_defaults(func=cmd_evaluate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args) or 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001
        logging.getLogger("budgetmax").debug("failure", exc_info=True)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
