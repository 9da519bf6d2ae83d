"""Benchmark pursuit-evasion games with analytic quadratic costs.

All scenario functions are quadratics of the concatenated joint strategy
vector, so gradients and Hessians are exact and cheap.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .games import (
    AugmentedGame,
    CHANCE,
    ConstraintSpec,
    GameDefinitionError,
    IndicatorConfig,
    Quadratic,
)


@dataclass(frozen=True)
class HprParams:
    """Hog-poacher-ranger parameters: minimum poacher-ranger distance ``r``,
    square strategy box, per-player strategy counts."""

    r: float = 1.0
    box: tuple[float, float] = (-2.0, 2.0)
    m: tuple[int, int, int] = (2, 2, 2)

    def __post_init__(self):
        if not self.r > 0:
            raise GameDefinitionError("r must be positive")
        if not self.box[0] < self.box[1]:
            raise GameDefinitionError("box must be a (low, high) pair with low < high")


@dataclass(frozen=True)
class ChainParams:
    """N-player chain variant: one hog, N-2 poachers each chasing their
    predecessor and keeping distance ``r`` from their successor, and a final
    unconstrained chaser."""

    n_players: int
    m: int = 2
    r: float = 1.0
    box: tuple[float, float] = (-2.0, 2.0)

    def __post_init__(self):
        if self.n_players < 2:
            raise GameDefinitionError("the chain needs at least 2 players")
        if self.m < 1:
            raise GameDefinitionError("each player needs at least one strategy")
        if not self.r > 0:
            raise GameDefinitionError("r must be positive")


def _block_sqdist(total_dim, off_a, off_b, d, scale=1.0, shift=0.0) -> Quadratic:
    """scale * ||y_a - y_b||^2 + shift over two d-dimensional blocks."""
    H = np.zeros((total_dim, total_dim))
    for t in range(d):
        a, b = off_a + t, off_b + t
        H[a, a] += 2.0 * scale
        H[b, b] += 2.0 * scale
        H[a, b] -= 2.0 * scale
        H[b, a] -= 2.0 * scale
    return Quadratic(H, None, shift)


def _point_sqdist(total_dim, off, d, point, scale=1.0, shift=0.0) -> Quadratic:
    """scale * ||y_blk - point||^2 + shift for one d-dimensional block."""
    point = np.asarray(point, dtype=np.float64)
    H = np.zeros((total_dim, total_dim))
    b = np.zeros(total_dim)
    for t in range(d):
        H[off + t, off + t] = 2.0 * scale
        b[off + t] = -2.0 * scale * point[t]
    return Quadratic(H, b, scale * float(point @ point) + shift)


def _default_eps(indicator: IndicatorConfig | None, eps):
    indicator = indicator or IndicatorConfig(mode=CHANCE, omega=1.0)
    if eps is None:
        eps = 0.8 if indicator.mode == CHANCE else 0.0
    return indicator, float(eps)


def hog_poacher_ranger(params: HprParams | None = None, *,
                       eps=None, indicator: IndicatorConfig | None = None
                       ) -> AugmentedGame:
    """Three players in the plane: the hog (0) maximizes squared distance to
    the poacher (1), the poacher minimizes squared distance to the hog but
    must keep a minimum distance from the ranger (2), who in turn minimizes
    squared distance to the poacher."""
    params = params or HprParams()
    d, D = 2, 6
    costs = (
        _block_sqdist(D, 0, 2, d, scale=-1.0),
        _block_sqdist(D, 0, 2, d, scale=1.0),
        _block_sqdist(D, 2, 4, d, scale=1.0),
    )
    indicator, eps = _default_eps(indicator, eps)
    guard = _block_sqdist(D, 2, 4, d, scale=1.0, shift=-params.r ** 2)
    spec = ConstraintSpec.shared(0, owners=(1,), threshold=eps, measures=(1, 2))
    return AugmentedGame.build(
        m=params.m, dims=(d, d, d), costs=costs,
        constraints=((spec, guard),), indicator=indicator, box=params.box,
    )


def n_player_chain(params: ChainParams, *, eps=None,
                   indicator: IndicatorConfig | None = None) -> AugmentedGame:
    """Chain generalization: player 0 flees player 1; each middle player
    chases its predecessor while keeping distance ``r`` from its successor;
    the last player just chases. With 3 players this is hog-poacher-ranger."""
    n = params.n_players
    d = 2
    D = n * d
    offs = [i * d for i in range(n)]
    costs = [_block_sqdist(D, offs[0], offs[1], d, scale=-1.0)]
    for i in range(1, n):
        costs.append(_block_sqdist(D, offs[i - 1], offs[i], d, scale=1.0))
    indicator, eps = _default_eps(indicator, eps)
    constraints = []
    for i in range(1, n - 1):
        guard = _block_sqdist(D, offs[i], offs[i + 1], d, scale=1.0,
                              shift=-params.r ** 2)
        spec = ConstraintSpec.shared(i, owners=(i,), threshold=eps,
                                     measures=(i, i + 1))
        constraints.append((spec, guard))
    return AugmentedGame.build(
        m=(params.m,) * n, dims=(d,) * n, costs=tuple(costs),
        constraints=tuple(constraints), indicator=indicator, box=params.box,
    )


def stationary_hog_variant(*, eps=None, indicator: IndicatorConfig | None = None,
                           r: float = 1.0, box=(-2.0, 2.0),
                           m: tuple[int, int] = (3, 2)) -> AugmentedGame:
    """Two decision players: the poacher (0, three strategies by default)
    chases a hog fixed at the origin, constrained to keep distance ``r`` from
    the ranger (1). The fixed hog is folded into the poacher's cost, so the
    game values match the three-player version with a frozen hog."""
    d, D = 2, 4
    costs = (
        _point_sqdist(D, 0, d, (0.0, 0.0), scale=1.0),
        _block_sqdist(D, 0, 2, d, scale=1.0),
    )
    indicator, eps = _default_eps(indicator, eps)
    guard = _block_sqdist(D, 0, 2, d, scale=1.0, shift=-r ** 2)
    spec = ConstraintSpec.shared(0, owners=(0,), threshold=eps, measures=(0, 1))
    return AugmentedGame.build(
        m=m, dims=(d, d), costs=costs, constraints=((spec, guard),),
        indicator=indicator, box=box,
    )
