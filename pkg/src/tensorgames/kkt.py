"""KKT reformulation of games as box-constrained complementarity problems.

Per player the first-order conditions couple: stationarity of the Lagrangian
in the mixing weights (and, for augmented games, in the pure strategies),
the simplex equality with a free dual, and the constraint inequalities with
nonnegative duals. Stacked across players these form one square mixed
complementarity problem with an analytic Jacobian assembled from partial
tensor contractions.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import backends
from .games import (
    AugmentedGame,
    CHANCE,
    GameDefinitionError,
    TensorGame,
    indicator_curvature,
    indicator_slope,
    indicator_value,
)


@dataclass(frozen=True)
class VariableLayout:
    """Ordering of the flat solver vector.

    Segments in order: per-player weights x_i (length m_i, bound [0, inf)),
    per-player strategies s_i (length m_i*d_i, box bounds; only when ``dims``
    is set), one free simplex dual per player, then one nonnegative
    constraint dual per (owner, constraint label) pair.
    """

    m: tuple[int, ...]
    dims: tuple[int, ...] | None
    pairs: tuple[tuple[int, int], ...]

    def __post_init__(self):
        object.__setattr__(self, "m", tuple(int(v) for v in self.m))
        if self.dims is not None:
            object.__setattr__(self, "dims", tuple(int(v) for v in self.dims))
        object.__setattr__(self, "pairs",
                           tuple((int(i), int(j)) for i, j in self.pairs))

    @property
    def n_players(self) -> int:
        return len(self.m)

    @property
    def x_total(self) -> int:
        return sum(self.m)

    @property
    def s_total(self) -> int:
        if self.dims is None:
            return 0
        return sum(mi * di for mi, di in zip(self.m, self.dims))

    @property
    def n(self) -> int:
        return self.x_total + self.s_total + self.n_players + len(self.pairs)

    def x_offset(self, i: int) -> int:
        return sum(self.m[:i])

    def x_slice(self, i: int) -> slice:
        off = self.x_offset(i)
        return slice(off, off + self.m[i])

    def s_offset(self, i: int) -> int:
        if self.dims is None:
            raise GameDefinitionError("layout has no strategy segment")
        return self.x_total + sum(mi * di for mi, di in
                                  zip(self.m[:i], self.dims[:i]))

    def s_slice(self, i: int) -> slice:
        off = self.s_offset(i)
        return slice(off, off + self.m[i] * self.dims[i])

    def s_coords(self, i: int, coord: int) -> np.ndarray:
        """Positions of coordinate ``coord`` across player i's strategies."""
        off = self.s_offset(i)
        return off + np.arange(self.m[i]) * self.dims[i] + coord

    def lam_index(self, i: int) -> int:
        return self.x_total + self.s_total + i

    def gamma_offset(self) -> int:
        return self.x_total + self.s_total + self.n_players

    def gamma_index(self, player: int, label: int) -> int:
        return self.gamma_offset() + self.pairs.index((player, label))

    def pack(self, x, s, lam, gamma) -> np.ndarray:
        z = np.zeros(self.n)
        for i in range(self.n_players):
            z[self.x_slice(i)] = np.asarray(x[i], dtype=np.float64)
        if self.dims is not None:
            for i in range(self.n_players):
                z[self.s_slice(i)] = np.asarray(s[i], dtype=np.float64).reshape(-1)
        if lam is not None:
            z[self.x_total + self.s_total:self.gamma_offset()] = np.asarray(lam)
        if gamma is not None:
            z[self.gamma_offset():] = np.asarray(gamma, dtype=np.float64)
        return z

    def unpack(self, z):
        x = [np.asarray(z[self.x_slice(i)]) for i in range(self.n_players)]
        s = None
        if self.dims is not None:
            s = [np.asarray(z[self.s_slice(i)]).reshape(self.m[i], self.dims[i])
                 for i in range(self.n_players)]
        lam = np.asarray(z[self.x_total + self.s_total:self.gamma_offset()])
        gamma = np.asarray(z[self.gamma_offset():])
        return x, s, lam, gamma

    def primal_mask(self) -> np.ndarray:
        """True on the weight and strategy segments, False on duals."""
        mask = np.zeros(self.n, dtype=bool)
        mask[:self.x_total + self.s_total] = True
        return mask


@dataclass(frozen=True)
class MCPInstance:
    """Box-constrained mixed complementarity problem: find l <= z <= u with
    residual(z) complementary to the active bounds per coordinate."""

    lower: np.ndarray
    upper: np.ndarray
    residual: Callable[[np.ndarray], np.ndarray]
    jacobian: Callable[[np.ndarray], np.ndarray]
    layout: VariableLayout | None = None

    def __post_init__(self):
        lower = np.asarray(self.lower, dtype=np.float64)
        upper = np.asarray(self.upper, dtype=np.float64)
        if lower.shape != upper.shape or lower.ndim != 1:
            raise GameDefinitionError("bounds must be equal-length vectors")
        if (lower > upper).any():
            raise GameDefinitionError("lower bound exceeds upper bound")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @property
    def n(self) -> int:
        return self.lower.shape[0]


def _pairs_of(constraints) -> tuple[tuple[int, int], ...]:
    pairs = []
    for spec, _ in constraints:
        for i in spec.owners:
            pairs.append((i, spec.label))
    pairs.sort()
    return tuple(pairs)


def _ownership(constraints, pairs, n_players):
    """Per player: list of (dual position, constraint position)."""
    label_pos = {spec.label: k for k, (spec, _) in enumerate(constraints)}
    owned = [[] for _ in range(n_players)]
    for pos, (i, label) in enumerate(pairs):
        owned[i].append((pos, label_pos[label]))
    return label_pos, owned


def assemble_weight_mcp(game: TensorGame) -> MCPInstance:
    """Complementarity system over mixing weights and duals of a finite
    tensor game."""
    n_players = game.n_players
    m = game.m
    pairs = _pairs_of(game.constraints)
    layout = VariableLayout(m=m, dims=None, pairs=pairs)

    cost_arr = [t.array for t in game.costs]
    con_arr = [q.array for _, q in game.constraints]
    specs = [spec for spec, _ in game.constraints]
    label_pos, owned = _ownership(game.constraints, pairs, n_players)

    n = layout.n
    lower = np.full(n, -np.inf)
    upper = np.full(n, np.inf)
    lower[:layout.x_total] = 0.0
    lower[layout.gamma_offset():] = 0.0

    x_slices = [layout.x_slice(i) for i in range(n_players)]
    lam_idx = [layout.lam_index(i) for i in range(n_players)]
    gamma_off = layout.gamma_offset()

    def combined(i, gamma):
        T = cost_arr[i]
        for pos, jc in owned[i]:
            g = gamma[pos]
            if g != 0.0:
                T = T - g * con_arr[jc]
        return T

    def residual(z):
        x, _, lam, gamma = layout.unpack(z)
        kern = backends.active().prepare(x)
        F = np.empty(n)
        for i in range(n_players):
            F[x_slices[i]] = kern.contract_skip(combined(i, gamma), i) - lam[i]
            F[lam_idx[i]] = x[i].sum() - 1.0
        con_val = [kern.contract_all(q) for q in con_arr]
        for pos, (i, label) in enumerate(pairs):
            jc = label_pos[label]
            F[gamma_off + pos] = con_val[jc] - specs[jc].threshold(i)
        return F

    def jacobian(z):
        x, _, lam, gamma = layout.unpack(z)
        kern = backends.active().prepare(x)
        J = np.zeros((n, n))
        q_skip = {}

        def con_skip(jc, p):
            key = (jc, p)
            if key not in q_skip:
                q_skip[key] = kern.contract_skip(con_arr[jc], p)
            return q_skip[key]

        for i in range(n_players):
            T = combined(i, gamma)
            for p in range(n_players):
                if p == i:
                    continue
                if i < p:
                    block = kern.contract_skip_pair(T, i, p)
                else:
                    block = kern.contract_skip_pair(T, p, i).T
                J[x_slices[i], x_slices[p]] = block
            J[x_slices[i], lam_idx[i]] = -1.0
            for pos, jc in owned[i]:
                J[x_slices[i], gamma_off + pos] = -con_skip(jc, i)
            J[lam_idx[i], x_slices[i]] = 1.0
        for pos, (i, label) in enumerate(pairs):
            jc = label_pos[label]
            for p in range(n_players):
                J[gamma_off + pos, x_slices[p]] = con_skip(jc, p)
        return J

    return MCPInstance(lower, upper, residual, jacobian, layout)


class _AugmentedContext:
    """Everything derived from (s, gamma) that the residual and Jacobian of a
    strategy-augmented game share: batched function values, gradients,
    indicator slopes, and the combined stationarity integrands."""

    __slots__ = ("Y", "fval", "gval", "qval", "slope", "curve",
                 "fgrad", "ggrad", "fhess", "ghess", "V")

    def __init__(self, game, owned, gamma, s, omega, idx, need_hess):
        mode = game.indicator.mode
        dims = game.dims
        offs = game.offsets
        Y = np.empty((idx.shape[1], game.joint_dim))
        for i in range(game.n_players):
            Y[:, offs[i]:offs[i] + dims[i]] = s[i][idx[i]]
        self.Y = Y
        self.fval = [f.value_many(Y) for f in game.costs]
        self.gval = [g.value_many(Y) for _, g in game.constraints]
        self.qval = [indicator_value(mode, omega, v) for v in self.gval]
        self.slope = [indicator_slope(mode, omega, v) for v in self.gval]
        self.fgrad = [f.grad_many(Y) for f in game.costs]
        self.ggrad = [g.grad_many(Y) for _, g in game.constraints]
        # stationarity integrand per player: d/dy [f_i - sum_j gamma_ij rho(g_j)]
        self.V = []
        for i in range(game.n_players):
            v = self.fgrad[i]
            for pos, jc in owned[i]:
                gm = gamma[pos]
                if gm != 0.0:
                    v = v - gm * self.slope[jc][:, None] * self.ggrad[jc]
            self.V.append(v)
        if need_hess:
            self.curve = [indicator_curvature(mode, omega, v) for v in self.gval]
            self.fhess = [f.hess_many(Y) for f in game.costs]
            self.ghess = [g.hess_many(Y) for _, g in game.constraints]
        else:
            self.curve = self.fhess = self.ghess = None


def assemble_augmented_mcp(game: AugmentedGame, omega: float) -> MCPInstance:
    """Complementarity system over weights, pure strategies, and duals of a
    strategy-augmented game, with tensors regenerated from the current
    strategies on every evaluation.

    ``omega`` is the indicator strictness used for this assembly (ignored in
    expectation mode).
    """
    for pos, f in enumerate(game.costs):
        if not f.has_derivatives:
            raise GameDefinitionError(
                f"cost function of player {pos} lacks analytic derivatives"
            )
    for spec, g in game.constraints:
        if not g.has_derivatives:
            raise GameDefinitionError(
                f"constraint {spec.label} lacks analytic derivatives"
            )
    if game.indicator.mode == CHANCE and not (np.isfinite(omega) and omega > 0):
        raise GameDefinitionError(f"strictness must be positive, got {omega}")

    n_players = game.n_players
    m = game.m
    dims = game.dims
    offs = game.offsets
    pairs = _pairs_of(game.constraints)
    layout = VariableLayout(m=m, dims=dims, pairs=pairs)
    specs = [spec for spec, _ in game.constraints]
    label_pos, owned = _ownership(game.constraints, pairs, n_players)
    idx = np.indices(m).reshape(n_players, -1)

    n = layout.n
    lower = np.full(n, -np.inf)
    upper = np.full(n, np.inf)
    lower[:layout.x_total] = 0.0
    for i in range(n_players):
        lower[layout.s_slice(i)] = np.tile(game.lower[i], m[i])
        upper[layout.s_slice(i)] = np.tile(game.upper[i], m[i])
    lower[layout.gamma_offset():] = 0.0

    x_slices = [layout.x_slice(i) for i in range(n_players)]
    s_slices = [layout.s_slice(i) for i in range(n_players)]
    s_coords = [[layout.s_coords(i, c) for c in range(dims[i])]
                for i in range(n_players)]
    x_ranges = [np.arange(sl.start, sl.stop) for sl in x_slices]
    lam_idx = [layout.lam_index(i) for i in range(n_players)]
    gamma_off = layout.gamma_offset()

    def context(z, need_hess):
        x, s, lam, gamma = layout.unpack(z)
        ctx = _AugmentedContext(game, owned, gamma, s, omega, idx, need_hess)
        return x, lam, gamma, ctx

    def residual(z):
        x, lam, gamma, ctx = context(z, need_hess=False)
        kern = backends.active().prepare(x)
        F = np.empty(n)
        for i in range(n_players):
            U = ctx.fval[i]
            for pos, jc in owned[i]:
                gm = gamma[pos]
                if gm != 0.0:
                    U = U - gm * ctx.qval[jc]
            F[x_slices[i]] = kern.contract_skip(U.reshape(m), i) - lam[i]
            block = np.empty((m[i], dims[i]))
            for c in range(dims[i]):
                block[:, c] = x[i] * kern.contract_skip(
                    ctx.V[i][:, offs[i] + c].reshape(m), i)
            F[s_slices[i]] = block.reshape(-1)
            F[lam_idx[i]] = x[i].sum() - 1.0
        con_val = [kern.contract_all(q.reshape(m)) for q in ctx.qval]
        for pos, (i, label) in enumerate(pairs):
            jc = label_pos[label]
            F[gamma_off + pos] = con_val[jc] - specs[jc].threshold(i)
        return F

    def jacobian(z):
        x, lam, gamma, ctx = context(z, need_hess=True)
        kern = backends.active().prepare(x)
        J = np.zeros((n, n))
        q_skip = {}

        def skip(flat, i):
            return kern.contract_skip(flat.reshape(m), i)

        def skip_pair(flat, i, p):
            if i < p:
                return kern.contract_skip_pair(flat.reshape(m), i, p)
            return kern.contract_skip_pair(flat.reshape(m), p, i).T

        def con_skip(jc, p):
            key = (jc, p)
            if key not in q_skip:
                q_skip[key] = skip(ctx.qval[jc], p)
            return q_skip[key]

        for i in range(n_players):
            U = ctx.fval[i]
            for pos, jc in owned[i]:
                gm = gamma[pos]
                if gm != 0.0:
                    U = U - gm * ctx.qval[jc]
            Vi = ctx.V[i]

            # weight-stationarity rows
            for p in range(n_players):
                if p != i:
                    J[x_slices[i], x_slices[p]] = skip_pair(U, i, p)
                for e in range(dims[p]):
                    col = Vi[:, offs[p] + e]
                    if p == i:
                        J[x_ranges[i], s_coords[i][e]] = skip(col, i)
                    else:
                        J[np.ix_(x_ranges[i], s_coords[p][e])] = \
                            skip_pair(col, i, p) * x[p][None, :]
            J[x_slices[i], lam_idx[i]] = -1.0
            for pos, jc in owned[i]:
                J[x_slices[i], gamma_off + pos] = -con_skip(jc, i)

            # strategy-stationarity rows
            for c in range(dims[i]):
                ic = offs[i] + c
                vic = Vi[:, ic]
                rows = s_coords[i][c]
                J[rows, x_ranges[i]] = skip(vic, i)
                for p in range(n_players):
                    if p != i:
                        J[np.ix_(rows, x_ranges[p])] = \
                            x[i][:, None] * skip_pair(vic, i, p)
                    for e in range(dims[p]):
                        pe = offs[p] + e
                        W = ctx.fhess[i][:, ic, pe].copy()
                        for pos, jc in owned[i]:
                            gm = gamma[pos]
                            if gm != 0.0:
                                W -= gm * (
                                    ctx.curve[jc] * ctx.ggrad[jc][:, ic]
                                    * ctx.ggrad[jc][:, pe]
                                    + ctx.slope[jc] * ctx.ghess[jc][:, ic, pe]
                                )
                        if p == i:
                            J[rows, s_coords[i][e]] = x[i] * skip(W, i)
                        else:
                            J[np.ix_(rows, s_coords[p][e])] = \
                                x[i][:, None] * skip_pair(W, i, p) \
                                * x[p][None, :]
                for pos, jc in owned[i]:
                    sens = ctx.slope[jc] * ctx.ggrad[jc][:, ic]
                    J[rows, gamma_off + pos] = -x[i] * skip(sens, i)

            J[lam_idx[i], x_slices[i]] = 1.0

        for pos, (i, label) in enumerate(pairs):
            jc = label_pos[label]
            row = gamma_off + pos
            for p in range(n_players):
                J[row, x_slices[p]] = con_skip(jc, p)
                for e in range(dims[p]):
                    sens = ctx.slope[jc] * ctx.ggrad[jc][:, offs[p] + e]
                    J[row, s_coords[p][e]] = x[p] * skip(sens, p)
        return J

    return MCPInstance(lower, upper, residual, jacobian, layout)
