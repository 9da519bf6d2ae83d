"""Command-line experiment runner.

Subcommands: ``solve`` (single run, JSON solution dump), ``bulk`` (randomized
trials), ``sweep-eps`` (confidence sweep), ``sweep-omega`` (strictness
telemetry), ``bench`` (chain timing grid). Exit codes: 0 success, 1
configuration error, 2 when every trial failed.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import ConfigError, ExperimentConfig, load_config
from .experiments import (
    bench_chain,
    build_game,
    draw_start,
    run_bulk,
    sweep_epsilon,
    sweep_omega,
    tighten_config,
    trial_seeds,
    write_solution_json,
    write_summary_csv,
    write_trials_csv,
)
from .tighten import SOLVED, iterative_tighten

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_ALL_FAILED = 2


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tensorgames",
        description="Equilibrium experiments for constrained tensor games",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in (
        ("solve", "one run from the seed; writes solution.json"),
        ("bulk", "randomized trials; writes trials.csv and summary.csv"),
        ("sweep-eps", "bulk runs across confidence thresholds"),
        ("sweep-omega", "per-stage constraint distances across strictness"),
        ("bench", "chain-scenario timing grid"),
    ):
        cmd = sub.add_parser(name, help=text)
        cmd.add_argument("--config", type=str, default=None,
                         help="flat key=value config file")
        cmd.add_argument("--seed", type=int, default=None,
                         help="master seed override")
        cmd.add_argument("--out", type=str, default=None,
                         help="output directory override")
        cmd.add_argument("--trials", type=int, default=None,
                         help="trial count override")
    return parser


def _load(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.out is not None:
        overrides["out"] = args.out
    if args.trials is not None:
        overrides["trials"] = args.trials
    return cfg.replace(**overrides) if overrides else cfg


def _out_dir(cfg: ExperimentConfig) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _cmd_solve(cfg: ExperimentConfig) -> int:
    game, _ = build_game(cfg)
    seed = int(trial_seeds(cfg.seed, 1)[0])
    x0, s0 = draw_start(game, seed)
    solution = iterative_tighten(game, x0, s0, tighten_config(cfg), seed=seed)
    out = _out_dir(cfg)
    write_solution_json(out / "solution.json", solution)
    print(f"status={solution.status} omega_reached={solution.omega_reached:g} "
          f"-> {out / 'solution.json'}")
    return EXIT_OK if solution.status == SOLVED else EXIT_ALL_FAILED


def _cmd_bulk(cfg: ExperimentConfig) -> int:
    result = run_bulk(cfg)
    out = _out_dir(cfg)
    write_trials_csv(out / "trials.csv", [({}, result)], cfg)
    write_summary_csv(out / "summary.csv", [result.summary()])
    summary = result.summary()
    print(f"{summary['solved']}/{summary['trials']} trials solved "
          f"({summary['pct_solved']:.1f}%) -> {out}")
    return EXIT_OK if result.solved else EXIT_ALL_FAILED


def _cmd_sweep_eps(cfg: ExperimentConfig) -> int:
    results = sweep_epsilon(cfg)
    out = _out_dir(cfg)
    write_trials_csv(out / "trials.csv",
                     [({"epsilon": eps}, res) for eps, res in results], cfg)
    rows = []
    for eps, res in results:
        row = res.summary()
        row["epsilon"] = eps
        rows.append(row)
    write_summary_csv(out / "summary.csv", rows)
    total_solved = sum(len(res.solved) for _, res in results)
    print(f"{len(results)} thresholds, {total_solved} solved trials -> {out}")
    return EXIT_OK if total_solved else EXIT_ALL_FAILED


def _cmd_sweep_omega(cfg: ExperimentConfig) -> int:
    rows = sweep_omega(cfg)
    out = _out_dir(cfg)
    write_summary_csv(out / "summary.csv", [
        {"epsilon": r.epsilon, "omega": r.omega,
         "mean_distance": r.mean_distance, "count": r.count}
        for r in rows
    ])
    print(f"{len(rows)} (epsilon, omega) stages -> {out}")
    return EXIT_OK if rows else EXIT_ALL_FAILED


def _cmd_bench(cfg: ExperimentConfig) -> int:
    rows = bench_chain(cfg)
    out = _out_dir(cfg)
    write_summary_csv(out / "summary.csv", [
        {"players": r.players, "strategies": r.strategies,
         "tensor_entries": r.tensor_entries, "repeats": r.repeats,
         "solved": r.solved, "pct_solved": r.pct_solved,
         "mean_time_ms": r.mean_time_ms, "ci95_ms": r.ci95_ms}
        for r in rows
    ])
    for r in rows:
        print(f"N={r.players} m={r.strategies}: {r.mean_time_ms:.1f} ms "
              f"± {r.ci95_ms:.1f} ({r.pct_solved:.0f}% solved)")
    if all(r.solved == 0 for r in rows):
        return EXIT_ALL_FAILED
    return EXIT_OK


_COMMANDS = {
    "solve": _cmd_solve,
    "bulk": _cmd_bulk,
    "sweep-eps": _cmd_sweep_eps,
    "sweep-omega": _cmd_sweep_omega,
    "bench": _cmd_bench,
}


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = _load(args)
        return _COMMANDS[args.command](cfg)
    except (ConfigError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
