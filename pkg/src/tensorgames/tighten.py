"""Iterative tightening of the soft chance constraints.

A small strictness makes the softened indicator nearly linear and the
complementarity problem easy; the exact chance constraint needs a large one.
The outer loop solves at a low strictness, doubles it, and re-solves warm
started from the previous solution until the target strictness is passed or
a solve fails. Expectation-mode games have no strictness parameter and are
solved once.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .games import AugmentedGame, EXPECTATION, MixProfile, StrategyProfile
from .kkt import assemble_augmented_mcp
from .mcp import SolverOptions, solve

SOLVED = "solved"
FAILED = "failed"


@dataclass(frozen=True)
class TighteningConfig:
    """Schedule parameters.

    ``omega_accept`` is the smallest final strictness at which a run still
    counts as solved; runs that fail earlier are reported as failures even
    though a partial solution is returned.
    """

    omega_des: float = 64.0
    omega0: float = 1.0
    omega_accept: float = 10.0
    solver: SolverOptions = field(default_factory=SolverOptions)

    def __post_init__(self):
        if not 0 < self.omega0 <= self.omega_des:
            raise ValueError("need 0 < omega0 <= omega_des")
        if self.omega_accept > self.omega_des:
            raise ValueError("omega_accept cannot exceed omega_des")


@dataclass(frozen=True)
class Solution:
    """Equilibrium candidate: weights, strategies, duals, and the strictness
    actually reached (0 when the very first solve failed)."""

    x: MixProfile
    s: StrategyProfile
    lam: np.ndarray
    gamma: dict
    omega_reached: float
    status: str

    @property
    def solved(self) -> bool:
        return self.status == SOLVED


def _as_arrays(game, x0, s0):
    if isinstance(x0, MixProfile):
        x0 = x0.weights
    if isinstance(s0, StrategyProfile):
        s0 = s0.points
    x = [np.asarray(v, dtype=np.float64) for v in x0]
    s = [np.asarray(p, dtype=np.float64).reshape(game.m[i], game.dims[i])
         for i, p in enumerate(s0)]
    return x, s


def _initial_point(mcp, x, s):
    """Pack the guesses with least-squares simplex duals: lam_i recentres
    player i's weight-stationarity rows, which start as gradient - lam_i."""
    layout = mcp.layout
    z0 = layout.pack(x, s, None, None)
    F0 = mcp.residual(z0)
    lam0 = np.array([F0[layout.x_slice(i)].mean()
                     for i in range(layout.n_players)])
    return layout.pack(x, s, lam0, None)


def _solution(layout, z, omega, status):
    x, s, lam, gamma = layout.unpack(z)
    gam = {pair: float(g) for pair, g in zip(layout.pairs, gamma)}
    return Solution(
        x=MixProfile(tuple(x)),
        s=StrategyProfile(tuple(s)),
        lam=np.array(lam),
        gamma=gam,
        omega_reached=float(omega),
        status=status,
    )


def iterative_tighten(game: AugmentedGame, x0, s0,
                      cfg: TighteningConfig | None = None,
                      seed=0, on_stage=None) -> Solution:
    """Run the doubling schedule from the initial guesses.

    The strictness sequence is omega0, 2*omega0, ... and stops once the next
    value would be at least 2*omega_des, so the last solve happens in
    [omega_des, 2*omega_des). On a mid-schedule solver failure the last
    successful solution is returned with the strictness it reached; whether
    that counts as solved is decided by ``cfg.omega_accept``. ``on_stage``,
    when given, is called as on_stage(omega, x, s) after each successful
    stage.
    """
    cfg = cfg or TighteningConfig()
    x, s = _as_arrays(game, x0, s0)

    if game.indicator.mode == EXPECTATION:
        mcp = assemble_augmented_mcp(game, omega=1.0)
        z0 = _initial_point(mcp, x, s)
        outcome = solve(mcp, z0, cfg.solver, seed=np.random.SeedSequence([seed, 0]))
        if not outcome.converged:
            return _failed_initial(game, mcp.layout, x, s)
        if on_stage is not None:
            xs, ss, _, _ = mcp.layout.unpack(outcome.z)
            on_stage(cfg.omega_des, xs, ss)
        return _solution(mcp.layout, outcome.z, cfg.omega_des, SOLVED)

    omega = cfg.omega0
    z = None
    layout = None
    last_omega = 0.0
    stage = 0
    while True:
        mcp = assemble_augmented_mcp(game, omega=omega)
        layout = mcp.layout
        z0 = _initial_point(mcp, x, s) if z is None else z
        outcome = solve(mcp, z0, cfg.solver,
                        seed=np.random.SeedSequence([seed, stage]))
        if not outcome.converged:
            if z is None:
                return _failed_initial(game, layout, x, s)
            status = SOLVED if last_omega >= cfg.omega_accept else FAILED
            return _solution(layout, z, last_omega, status)
        z = outcome.z
        last_omega = omega
        if on_stage is not None:
            xs, ss, _, _ = layout.unpack(z)
            on_stage(omega, xs, ss)
        omega *= 2.0
        stage += 1
        if omega >= 2.0 * cfg.omega_des:
            break
    return _solution(layout, z, last_omega, SOLVED)


def _failed_initial(game, layout, x, s):
    gam = {pair: 0.0 for pair in layout.pairs}
    return Solution(
        x=MixProfile(tuple(x)),
        s=StrategyProfile(tuple(s)),
        lam=np.zeros(game.n_players),
        gamma=gam,
        omega_reached=0.0,
        status=FAILED,
    )
