"""Experiment runners: seeded randomized trials, parameter sweeps, and the
chain timing benchmark, with CSV/JSON emission.

Every trial is fully determined by the master seed: per-trial seeds are
drawn once up front, and each trial's initial weights (flat Dirichlet),
initial strategies (uniform in the box), and solver restart perturbations
derive from its own seed. Records are collected per trial (failures
included) and aggregates are taken over solved trials only.
"""

from __future__ import annotations

import csv
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import ConfigError, ExperimentConfig
from .evaluate import expected_cost, min_supported_distance, realized_feasibility
from .games import CHANCE, IndicatorConfig
from .mcp import SolverOptions
from .scenarios import ChainParams, HprParams, hog_poacher_ranger, \
    n_player_chain, stationary_hog_variant
from .tighten import SOLVED, Solution, TighteningConfig, iterative_tighten

MAX_TENSOR_ENTRIES = 10 ** 7

# player whose mixing weights the trial records track, per scenario
_TRACKED_PLAYER = {
    "hog_poacher_ranger": 1,
    "chain": 1,
    "stationary_hog": 0,
}
_ALIASES = {"hpr": "hog_poacher_ranger", "n_player_chain": "chain"}


def canonical_scenario(name: str) -> str:
    name = name.strip().lower()
    return _ALIASES.get(name, name)


def build_game(cfg: ExperimentConfig):
    """Instantiate the configured scenario; returns (game, tracked player)."""
    name = canonical_scenario(cfg.scenario)
    indicator = IndicatorConfig(mode=cfg.mode, omega=cfg.omega0)
    box = (cfg.box_low, cfg.box_high)
    eps = cfg.epsilon if cfg.mode == CHANCE else 0.0
    if name == "hog_poacher_ranger":
        m = cfg.m if cfg.m is not None else (2, 2, 2)
        if len(m) == 1:
            m = m * 3
        params = HprParams(r=cfg.r, box=box, m=tuple(m))
        game = hog_poacher_ranger(params, eps=eps, indicator=indicator)
    elif name == "chain":
        m = cfg.m[0] if cfg.m else 2
        params = ChainParams(n_players=cfg.players, m=m, r=cfg.r, box=box)
        game = n_player_chain(params, eps=eps, indicator=indicator)
    elif name == "stationary_hog":
        m = tuple(cfg.m) if cfg.m else (3, 2)
        game = stationary_hog_variant(eps=eps, indicator=indicator, r=cfg.r,
                                      box=box, m=m)
    else:
        raise ConfigError(f"unknown scenario {cfg.scenario!r}")
    return game, _TRACKED_PLAYER[name]


def tighten_config(cfg: ExperimentConfig) -> TighteningConfig:
    return TighteningConfig(
        omega_des=cfg.omega_des,
        omega0=cfg.omega0,
        omega_accept=cfg.omega_accept,
        solver=SolverOptions(
            tolerance=cfg.tolerance,
            max_iterations=cfg.max_iterations,
            max_restarts=cfg.max_restarts,
            perturbation=cfg.perturbation,
        ),
    )


def trial_seeds(master_seed: int, count: int) -> np.ndarray:
    rng = np.random.default_rng(master_seed)
    return rng.integers(0, 2 ** 63 - 1, size=count, dtype=np.int64)


def draw_start(game, seed):
    """Initial guesses: flat-Dirichlet weights, box-uniform strategies."""
    rng = np.random.default_rng(seed)
    x0 = [rng.dirichlet(np.ones(mi)) for mi in game.m]
    s0 = [rng.uniform(game.lower[i], game.upper[i], size=(game.m[i], game.dims[i]))
          for i in range(game.n_players)]
    return x0, s0


@dataclass(frozen=True)
class TrialRecord:
    trial: int
    seed: int
    status: str
    omega_reached: float
    costs: tuple[float, ...] | None
    feasibility: float | None
    weights: tuple[float, ...] | None
    min_distance: float | None
    time_ms: float


def _tracked_constraint(game):
    for spec, _ in game.constraints:
        if spec.measures is not None:
            return spec
    return None


def _evaluate_trial(game, tracked_player, solution: Solution):
    x, s = solution.x, solution.s
    costs = tuple(expected_cost(x, s, f) for f in game.costs)
    feas = [realized_feasibility(x, s, g) for _, g in game.constraints]
    feasibility = float(np.mean(feas)) if feas else 1.0
    weights = tuple(float(w) for w in x.weights[tracked_player])
    spec = _tracked_constraint(game)
    dist = None
    if spec is not None:
        dist = min_supported_distance(x, s, spec.measures)
    return costs, feasibility, weights, dist


def run_trial(game, tracked_player, cfg: ExperimentConfig, trial: int,
              seed: int, on_stage=None) -> TrialRecord:
    x0, s0 = draw_start(game, seed)
    t0 = time.perf_counter()
    solution = iterative_tighten(game, x0, s0, tighten_config(cfg),
                                 seed=seed, on_stage=on_stage)
    elapsed_ms = (time.perf_counter() - t0) * 1e3
    if solution.omega_reached > 0.0:
        costs, feasibility, weights, dist = _evaluate_trial(
            game, tracked_player, solution)
    else:
        costs = feasibility = weights = dist = None
    return TrialRecord(
        trial=trial, seed=int(seed), status=solution.status,
        omega_reached=solution.omega_reached, costs=costs,
        feasibility=feasibility, weights=weights, min_distance=dist,
        time_ms=elapsed_ms,
    )


def _trial_task(args):
    cfg, trial, seed = args
    game, tracked = build_game(cfg)
    return run_trial(game, tracked, cfg, trial, seed)


@dataclass
class BulkResult:
    config: ExperimentConfig
    records: list
    elapsed_s: float

    @property
    def solved(self) -> list:
        return [r for r in self.records if r.status == SOLVED]

    def summary(self) -> dict:
        solved = self.solved
        n_players = len(self.records[0].costs) if solved else \
            len(build_game(self.config)[0].m)
        out = {
            "scenario": canonical_scenario(self.config.scenario),
            "mode": self.config.mode,
            "epsilon": self.config.epsilon,
            "trials": len(self.records),
            "solved": len(solved),
            "pct_solved": 100.0 * len(solved) / len(self.records),
        }
        for i in range(n_players):
            vals = [r.costs[i] for r in solved]
            out[f"mean_cost_{i + 1}"] = float(np.mean(vals)) if vals else None
        for key, attr in (("mean_feasibility", "feasibility"),
                          ("mean_min_distance", "min_distance"),
                          ("mean_time_ms", "time_ms")):
            vals = [getattr(r, attr) for r in solved
                    if getattr(r, attr) is not None]
            out[key] = float(np.mean(vals)) if vals else None
        return out


def run_bulk(cfg: ExperimentConfig) -> BulkResult:
    """Randomized trials of the configured scenario from the master seed."""
    seeds = trial_seeds(cfg.seed, cfg.trials)
    t0 = time.perf_counter()
    if cfg.workers > 1:
        tasks = [(cfg, t, int(seeds[t])) for t in range(cfg.trials)]
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            records = list(pool.map(_trial_task, tasks))
    else:
        game, tracked = build_game(cfg)
        records = [run_trial(game, tracked, cfg, t, int(seeds[t]))
                   for t in range(cfg.trials)]
    records.sort(key=lambda r: r.trial)
    return BulkResult(cfg, records, time.perf_counter() - t0)


def sweep_epsilon(cfg: ExperimentConfig, epsilons=None) -> list[tuple[float, BulkResult]]:
    """run_bulk per threshold with shared per-trial seeds."""
    epsilons = tuple(cfg.sweep_epsilons if epsilons is None else epsilons)
    out = []
    for eps in epsilons:
        out.append((eps, run_bulk(cfg.replace(epsilon=eps))))
    return out


@dataclass(frozen=True)
class OmegaStageRow:
    epsilon: float
    omega: float
    mean_distance: float
    count: int


def sweep_omega(cfg: ExperimentConfig, epsilons=None) -> list[OmegaStageRow]:
    """Tightening-stage telemetry: the supported poacher-ranger distance after
    each strictness level, averaged per (epsilon, omega) over the trials that
    completed the stage."""
    if cfg.mode != CHANCE:
        raise ConfigError("the strictness sweep applies to chance mode only")
    epsilons = tuple(cfg.sweep_epsilons if epsilons is None else epsilons)
    rows = []
    for eps in epsilons:
        run_cfg = cfg.replace(epsilon=eps)
        game, tracked = build_game(run_cfg)
        spec = _tracked_constraint(game)
        if spec is None:
            raise ConfigError("scenario has no distance-measuring constraint")
        seeds = trial_seeds(run_cfg.seed, run_cfg.trials)
        stage_values: dict[float, list[float]] = {}

        for t in range(run_cfg.trials):
            def record(omega, xs, ss):
                dist = min_supported_distance(xs, ss, spec.measures)
                stage_values.setdefault(omega, []).append(dist)

            run_trial(game, tracked, run_cfg, t, int(seeds[t]), on_stage=record)
        for omega in sorted(stage_values):
            vals = stage_values[omega]
            rows.append(OmegaStageRow(eps, omega, float(np.mean(vals)), len(vals)))
    return rows


@dataclass(frozen=True)
class BenchRow:
    players: int
    strategies: int
    tensor_entries: int
    repeats: int
    solved: int
    pct_solved: float
    mean_time_ms: float
    ci95_ms: float


def bench_chain(cfg: ExperimentConfig) -> list[BenchRow]:
    """Timing grid over the chain scenario; rejects cells whose tensors would
    not fit at desk scale."""
    for n in cfg.bench_players:
        for m in cfg.bench_strategies:
            if m ** n > MAX_TENSOR_ENTRIES:
                raise ConfigError(
                    f"bench cell N={n}, m={m} needs {m ** n} tensor entries "
                    f"(> {MAX_TENSOR_ENTRIES})"
                )
    rows = []
    for n in cfg.bench_players:
        for m in cfg.bench_strategies:
            cell_cfg = cfg.replace(scenario="chain", players=n, m=(m,),
                                   trials=cfg.bench_repeats)
            result = run_bulk(cell_cfg)
            times = np.array([r.time_ms for r in result.records])
            solved = len(result.solved)
            ci = 0.0
            if len(times) > 1:
                ci = 1.96 * float(times.std(ddof=1)) / np.sqrt(len(times))
            rows.append(BenchRow(
                players=n, strategies=m, tensor_entries=m ** n,
                repeats=cfg.bench_repeats, solved=solved,
                pct_solved=100.0 * solved / len(result.records),
                mean_time_ms=float(times.mean()), ci95_ms=ci,
            ))
    return rows


# ---------------------------------------------------------------------------
# output emission


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


def trial_header(n_players: int, n_weights: int, extra=()) -> list[str]:
    cols = list(extra) + ["trial", "seed", "status", "omega_reached"]
    cols += [f"cost_{i + 1}" for i in range(n_players)]
    cols += ["feasibility"]
    cols += [f"weight_{k + 1}" for k in range(n_weights)]
    cols += ["min_distance", "time_ms"]
    return cols


def trial_row(record: TrialRecord, n_players: int, n_weights: int, extra=()):
    cells = list(extra)
    cells += [record.trial, record.seed, record.status, _fmt(record.omega_reached)]
    costs = record.costs or (None,) * n_players
    cells += [_fmt(c) for c in costs]
    cells.append(_fmt(record.feasibility))
    weights = record.weights or (None,) * n_weights
    cells += [_fmt(w) for w in weights]
    cells += [_fmt(record.min_distance), _fmt(record.time_ms)]
    return [str(c) for c in cells]


def write_trials_csv(path, results, cfg: ExperimentConfig) -> None:
    """``results``: list of (extra-column mapping, BulkResult)."""
    game, tracked = build_game(cfg)
    n_players = game.n_players
    n_weights = game.m[tracked]
    extra_keys = list(results[0][0]) if results else []
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(trial_header(n_players, n_weights, extra_keys))
        for extra, result in results:
            prefix = [_fmt(extra[k]) for k in extra_keys]
            for record in result.records:
                writer.writerow(trial_row(record, n_players, n_weights, prefix))


def write_summary_csv(path, rows: list[dict]) -> None:
    keys = list(rows[0]) if rows else []
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(keys)
        for row in rows:
            writer.writerow([_fmt(row[k]) for k in keys])


def solution_to_dict(solution: Solution) -> dict:
    return {
        "status": solution.status,
        "omega_reached": solution.omega_reached,
        "x": [list(map(float, w)) for w in solution.x.weights],
        "s": [[list(map(float, pt)) for pt in pts] for pts in solution.s.points],
        "lambda": [float(v) for v in solution.lam],
        "gamma": [
            {"player": int(i), "constraint": int(j), "value": float(v)}
            for (i, j), v in sorted(solution.gamma.items())
        ],
    }


def write_solution_json(path, solution: Solution) -> None:
    Path(path).write_text(json.dumps(solution_to_dict(solution), indent=2) + "\n")
