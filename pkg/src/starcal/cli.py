"""Command-line interface.

Subcommands:
  simulate            run one Monte Carlo campaign and write artifacts
  compare-strategies  run all three refinement strategies on shared seeds
  compare-noise       compare additive vs multiplicative tracker noise

Exit codes: 0 success, 2 configuration error, 3 numerical divergence in at
least one trial.
"""

from __future__ import annotations

import argparse
import os
import sys


from . import __version__
from .artifacts import emit_artifacts, format_noise_table, format_strategy_table
from .config import (
    ConfigError,
    SimConfig,
    load_config,
    maneuver_comparison_profile,
    single_filter_profile,
)
from .harness import (
    consistency_report,
    final_attitude_errors_deg,
    mean_refinements,
    run_monte_carlo,
)
from .mmae import STRATEGIES
from .sensors import ADDITIVE, MULTIPLICATIVE

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DIVERGED = 3


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="TOML configuration file")
    p.add_argument("--runs", type=int, help="number of Monte Carlo trials")
    p.add_argument("--seed", type=int, help="campaign seed")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--workers", type=int, help="worker processes (0 = per CPU)")
    p.add_argument("--fast", action="store_true", help="small smoke-test profile")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="starcal", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"starcal {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one campaign")
    _add_common(p)
    p.add_argument("--strategy", choices=STRATEGIES, help="refinement strategy")
    p.add_argument("--noise", choices=(ADDITIVE, MULTIPLICATIVE), help="tracker noise model")
    p.add_argument("--single-filter", action="store_true",
                   help="one filter, zero misalignment (no hypothesis bank)")

    p = sub.add_parser("compare-strategies", help="all strategies on shared seeds")
    _add_common(p)

    p = sub.add_parser("compare-noise", help="additive vs multiplicative tracker noise")
    _add_common(p)
    return parser


def _load(args: argparse.Namespace) -> SimConfig:
    cfg = load_config(args.config)
    if getattr(args, "single_filter", False):
        cfg = single_filter_profile(cfg)
    if getattr(args, "strategy", None):
        cfg = cfg.with_strategy(args.strategy)
    if getattr(args, "noise", None):
        cfg = cfg.with_noise_model(args.noise)
    cfg = cfg.with_campaign(runs=args.runs, seed=args.seed, workers=args.workers)
    if args.fast:
        cfg = cfg.fast()
    return cfg.validate()


def _failures(results) -> int:
    return sum(1 for r in results if r.failed)


def cmd_simulate(args: argparse.Namespace) -> int:
    cfg = _load(args)
    results, rmse = run_monte_carlo(cfg)
    if rmse is None:
        print("every trial diverged; no artifacts written", file=sys.stderr)
        return EXIT_DIVERGED
    report = consistency_report(results)
    os.makedirs(args.out, exist_ok=True)
    emit_artifacts(results, rmse, cfg, args.out, consistency=report)
    print(f"{cfg.campaign.runs} trials ({_failures(results)} failed), "
          f"final xi_mu = {rmse.xi_mu[-1]:.4e} rad, artifacts in {args.out}")
    return EXIT_DIVERGED if _failures(results) else EXIT_OK


def cmd_compare_strategies(args: argparse.Namespace) -> int:
    base = _load(args)
    os.makedirs(args.out, exist_ok=True)
    rows, failed = [], 0
    for kind in STRATEGIES:
        cfg = base.with_strategy(kind)
        results, rmse = run_monte_carlo(cfg)
        failed += _failures(results)
        if rmse is None:
            print(f"{kind}: every trial diverged", file=sys.stderr)
            continue
        sub = os.path.join(args.out, kind)
        os.makedirs(sub, exist_ok=True)
        emit_artifacts(results, rmse, cfg, sub, plots=True)
        rows.append({"strategy": kind, "refinements": mean_refinements(results),
                     "xi_mu": float(rmse.xi_mu[-1])})
    table = format_strategy_table(rows)
    with open(os.path.join(args.out, "strategy_comparison.txt"), "w", encoding="utf-8") as fh:
        fh.write(table)
    print(table, end="")
    return EXIT_DIVERGED if failed else EXIT_OK


def cmd_compare_noise(args: argparse.Namespace) -> int:
    base = maneuver_comparison_profile(_load(args))
    os.makedirs(args.out, exist_ok=True)
    rows, failed = [], 0
    for model in (ADDITIVE, MULTIPLICATIVE):
        cfg = base.with_noise_model(model)
        results, rmse = run_monte_carlo(cfg)
        failed += _failures(results)
        if rmse is None:
            print(f"{model}: every trial diverged", file=sys.stderr)
            continue
        sub = os.path.join(args.out, model)
        os.makedirs(sub, exist_ok=True)
        emit_artifacts(results, rmse, cfg, sub, plots=True)
        att = final_attitude_errors_deg(results)
        rows.append({"model": model, "mean": float(att.mean()),
                     "std": float(att.std(ddof=1)) if len(att) > 1 else 0.0,
                     "max": float(att.max())})
    table = format_noise_table(rows)
    with open(os.path.join(args.out, "noise_comparison.txt"), "w", encoding="utf-8") as fh:
        fh.write(table)
    print(table, end="")
    return EXIT_DIVERGED if failed else EXIT_OK


_COMMANDS = {
    "simulate": cmd_simulate,
    "compare-strategies": cmd_compare_strategies,
    "compare-noise": cmd_compare_noise,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
