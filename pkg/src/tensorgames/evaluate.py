"""Post-solve diagnostics.

Everything here applies the *exact* constraint semantics (strict indicator,
full joint-strategy enumeration) to a solution produced under the softened
ones, which is how solution quality is judged: expected costs, realized
feasibility probabilities, support metrics, KKT residuals, and a sampled
unilateral-improvement probe.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce

import numpy as np

from .games import (
    AugmentedGame,
    JointFunction,
    MixProfile,
    StrategyProfile,
    TensorGame,
    indicator_value,
)
from .kkt import assemble_augmented_mcp
from .mcp import reformulated_residual
from .tensors import full_contract


def _weights(x) -> list[np.ndarray]:
    if isinstance(x, MixProfile):
        return [np.asarray(w) for w in x.weights]
    return [np.asarray(w, dtype=np.float64) for w in x]


def _points(s) -> list[np.ndarray]:
    if isinstance(s, StrategyProfile):
        return [np.asarray(p) for p in s.points]
    out = []
    for p in s:
        p = np.asarray(p, dtype=np.float64)
        out.append(p.reshape(len(p), 1) if p.ndim == 1 else p)
    return out


def _joint(points: list[np.ndarray]):
    """Joint strategy matrix (rows = joint strategies) plus per-player index
    arrays, in row-major joint-index order."""
    m = tuple(p.shape[0] for p in points)
    idx = np.indices(m).reshape(len(points), -1)
    blocks = [p[idx[i]] for i, p in enumerate(points)]
    return np.hstack(blocks), idx, m


def _joint_weights(weights: list[np.ndarray]) -> np.ndarray:
    return reduce(np.multiply.outer, weights).reshape(-1)


def realized_feasibility(x, s, g: JointFunction) -> float:
    """Probability that the realized joint strategy satisfies g >= 0 exactly
    (boundary values count as feasible).

    Computed as one minus the infeasible probability mass, so a profile with
    no infeasible joint strategy reports exactly 1.0.
    """
    weights = _weights(x)
    Y, _, _ = _joint(_points(s))
    W = _joint_weights(weights)
    values = g.value_many(Y)
    infeasible = float(W[values < 0.0].sum())
    return float(min(1.0, max(0.0, 1.0 - infeasible)))


def expected_cost(x, s, f: JointFunction) -> float:
    """Expected cost of the mixed profile: the full contraction of the cost
    tensor generated by the pure strategies."""
    weights = _weights(x)
    Y, _, _ = _joint(_points(s))
    return float(_joint_weights(weights) @ f.value_many(Y))


def min_supported_distance(x, s, measures: tuple[int, int],
                           support_threshold: float = 1e-3) -> float:
    """Smallest distance between the two measured players' realized positions
    over joint strategies whose weight product exceeds the threshold."""
    if not 0.0 < support_threshold <= 1e-3:
        raise ValueError("support threshold must lie in (0, 1e-3]")
    weights = _weights(x)
    points = _points(s)
    _, idx, _ = _joint(points)
    W = _joint_weights(weights)
    supported = W > support_threshold
    if not supported.any():
        raise ValueError("no joint strategy exceeds the support threshold")
    a, b = measures
    delta = points[a][idx[a][supported]] - points[b][idx[b][supported]]
    return float(np.sqrt((delta * delta).sum(axis=1)).min())


def kkt_residual(solution, game: AugmentedGame, omega: float) -> float:
    """Infinity norm of the reformulated complementarity residual of the
    strategy-augmented system evaluated at the solution point."""
    mcp = assemble_augmented_mcp(game, omega)
    layout = mcp.layout
    gamma = [solution.gamma.get(pair, 0.0) for pair in layout.pairs]
    z = layout.pack(solution.x.weights, solution.s.points, solution.lam, gamma)
    phi = reformulated_residual(mcp, z)
    return float(np.abs(phi).max())


def improvement_probe(solution, game, omega: float | None = None,
                      trials: int = 1000, seed=0) -> float:
    """Largest unilateral cost decrease found by random sampling.

    For each player, candidate deviations (fresh simplex weights; box-clipped
    strategy perturbations for augmented games) are kept only when they
    satisfy that player's own soft constraints, and the best expected-cost
    decrease over all kept candidates is returned (0.0 when none improves).
    A sampled probe, not a certified best response.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    if isinstance(game, TensorGame):
        return _probe_weight_game(solution, game, trials, rng)
    return _probe_augmented(solution, game, omega, trials, rng)


def _probe_weight_game(solution, game: TensorGame, trials, rng):
    x = _weights(getattr(solution, "x", solution))
    best = 0.0
    for i in range(game.n_players):
        base = full_contract(game.costs[i], x)
        owned = [(spec, q) for spec, q in game.constraints if i in spec.owners]
        for _ in range(trials):
            cand = list(x)
            cand[i] = rng.dirichlet(np.ones(game.m[i]))
            ok = all(full_contract(q, cand) >= spec.threshold(i) - 1e-9
                     for spec, q in owned)
            if ok:
                best = max(best, base - full_contract(game.costs[i], cand))
    return float(best)


def _probe_augmented(solution, game: AugmentedGame, omega, trials, rng):
    if omega is None:
        omega = game.indicator.omega
    x = _weights(solution.x)
    points = _points(solution.s)
    Y, idx, m = _joint(points)
    mode = game.indicator.mode
    best = 0.0
    for i in range(game.n_players):
        base = float(_joint_weights(x) @ game.costs[i].value_many(Y))
        owned = [(spec, g) for spec, g in game.constraints if i in spec.owners]
        scale = 0.25 * (game.upper[i] - game.lower[i])
        for _ in range(trials):
            cand_x = list(x)
            cand_x[i] = rng.dirichlet(np.ones(game.m[i]))
            shift = rng.uniform(-1.0, 1.0, points[i].shape) * scale
            cand_pts = np.clip(points[i] + shift, game.lower[i], game.upper[i])
            Yc = Y.copy()
            off = game.offsets[i]
            Yc[:, off:off + game.dims[i]] = cand_pts[idx[i]]
            Wc = _joint_weights(cand_x)
            ok = True
            for spec, g in owned:
                soft = float(Wc @ indicator_value(mode, omega, g.value_many(Yc)))
                if soft < spec.threshold(i) - 1e-9:
                    ok = False
                    break
            if ok:
                best = max(best, base - float(Wc @ game.costs[i].value_many(Yc)))
    return float(best)


@dataclass(frozen=True)
class EvaluationReport:
    """Per-solution diagnostics, exact-constraint semantics throughout."""

    costs: tuple[float, ...]
    feasibility: dict
    weights: tuple[np.ndarray, ...]
    support_sizes: tuple[int, ...]
    min_distances: dict
    kkt_residual_norm: float
    probe: float | None


def evaluate_solution(game: AugmentedGame, solution, omega: float, *,
                      probe_trials: int = 0, seed=0,
                      support_threshold: float = 1e-3) -> EvaluationReport:
    """Full report for one solved game."""
    x, s = solution.x, solution.s
    costs = tuple(expected_cost(x, s, f) for f in game.costs)
    feas = {spec.label: realized_feasibility(x, s, g)
            for spec, g in game.constraints}
    dists = {}
    for spec, _ in game.constraints:
        if spec.measures is not None:
            dists[spec.label] = min_supported_distance(
                x, s, spec.measures, support_threshold)
    weights = tuple(np.asarray(w) for w in x.weights)
    supports = tuple(int((w > support_threshold).sum()) for w in weights)
    resid = kkt_residual(solution, game, omega)
    probe = None
    if probe_trials > 0:
        probe = improvement_probe(solution, game, omega, probe_trials, seed)
    return EvaluationReport(costs, feas, weights, supports, dists, resid, probe)
