"""Game representations.

Two levels: a ``TensorGame`` is the finite object (fixed cost and constraint
tensors over joint pure strategies), an ``AugmentedGame`` additionally treats
the continuous pure strategies as decision variables and generates the
tensors from cost/constraint functions through an indicator map. In chance
mode the indicator is a sigmoid of adjustable strictness, so constraint
tensor entries approximate the Boolean feasibility of each joint strategy
and their expectation approximates the probability that the realized joint
strategy is feasible. In expectation mode the raw constraint value is used
directly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .tensors import DenseTensor, ShapeError, fill_from, full_contract

CHANCE = "chance"
EXPECTATION = "expectation"

# sigmoid argument clamp; exp(+-500) already saturates to 0/1 in float64
SIGMOID_CLAMP = 500.0


class GameDefinitionError(ValueError):
    """A game was configured inconsistently."""


def _sigmoid(t):
    t = np.clip(t, -SIGMOID_CLAMP, SIGMOID_CLAMP)
    return 1.0 / (1.0 + np.exp(-t))


def indicator_value(mode: str, omega: float, g):
    """Indicator map from raw constraint value to constraint-tensor entry."""
    if mode == CHANCE:
        return _sigmoid(omega * np.asarray(g, dtype=np.float64))
    return np.asarray(g, dtype=np.float64)


def indicator_slope(mode: str, omega: float, g):
    """First derivative of the indicator map w.r.t. the raw value."""
    if mode == CHANCE:
        s = _sigmoid(omega * np.asarray(g, dtype=np.float64))
        return omega * s * (1.0 - s)
    return np.ones_like(np.asarray(g, dtype=np.float64))


def indicator_curvature(mode: str, omega: float, g):
    """Second derivative of the indicator map w.r.t. the raw value."""
    if mode == CHANCE:
        s = _sigmoid(omega * np.asarray(g, dtype=np.float64))
        return omega * omega * s * (1.0 - s) * (1.0 - 2.0 * s)
    return np.zeros_like(np.asarray(g, dtype=np.float64))


@dataclass(frozen=True)
class IndicatorConfig:
    """How raw constraint values become constraint-tensor entries.

    ``omega`` is the sigmoid strictness and only meaningful in chance mode;
    larger values push the sigmoid toward the exact 0/1 feasibility
    indicator.
    """

    mode: str = CHANCE
    omega: float = 1.0

    def __post_init__(self):
        if self.mode not in (CHANCE, EXPECTATION):
            raise GameDefinitionError(
                f"indicator mode must be {CHANCE!r} or {EXPECTATION!r}, "
                f"got {self.mode!r}"
            )
        if self.mode == CHANCE and not (np.isfinite(self.omega) and self.omega > 0):
            raise GameDefinitionError(
                f"chance mode needs a positive strictness, got {self.omega}"
            )


def indicator_apply(cfg: IndicatorConfig, g_value):
    """Apply the configured indicator to one raw constraint value (or array)."""
    out = indicator_value(cfg.mode, cfg.omega, g_value)
    if np.ndim(g_value) == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class ConstraintSpec:
    """One shared constraint: who respects it and at what threshold.

    ``thresholds`` maps each owning player to its threshold. ``measures``
    optionally names the pair of players whose separation the constraint
    tracks; it is reporting metadata used by the distance diagnostics.
    """

    label: int
    owners: tuple[int, ...]
    thresholds: Mapping[int, float]
    measures: tuple[int, int] | None = None

    def __post_init__(self):
        owners = tuple(sorted(set(int(i) for i in self.owners)))
        if not owners:
            raise GameDefinitionError("a constraint needs at least one owner")
        thresholds = {int(k): float(v) for k, v in dict(self.thresholds).items()}
        if set(thresholds) != set(owners):
            raise GameDefinitionError(
                f"thresholds must be given exactly for the owners {owners}, "
                f"got keys {sorted(thresholds)}"
            )
        object.__setattr__(self, "owners", owners)
        object.__setattr__(self, "thresholds", thresholds)
        if self.measures is not None:
            object.__setattr__(
                self, "measures", (int(self.measures[0]), int(self.measures[1]))
            )

    @classmethod
    def shared(cls, label, owners, threshold=0.0, measures=None) -> "ConstraintSpec":
        """Single threshold shared by every owner."""
        owners = tuple(owners)
        return cls(label, owners, {i: threshold for i in owners}, measures)

    def threshold(self, player: int) -> float:
        return self.thresholds[player]


def _validate_constraint_spec(spec: ConstraintSpec, n_players: int, mode: str):
    for i in spec.owners:
        if not 0 <= i < n_players:
            raise GameDefinitionError(
                f"constraint {spec.label} owned by player {i}, but the game "
                f"has {n_players} players"
            )
        if mode == CHANCE and not 0.0 <= spec.threshold(i) <= 1.0:
            raise GameDefinitionError(
                f"chance-mode threshold for (player {i}, constraint "
                f"{spec.label}) must lie in [0, 1], got {spec.threshold(i)}"
            )


@dataclass(frozen=True)
class TensorGame:
    """Finite N-player game with per-player cost tensors and shared
    constraint tensors, all of shape (m_1, ..., m_N)."""

    costs: tuple[DenseTensor, ...]
    constraints: tuple[tuple[ConstraintSpec, DenseTensor], ...] = ()
    mode: str = CHANCE

    def __post_init__(self):
        object.__setattr__(self, "costs", tuple(self.costs))
        object.__setattr__(self, "constraints", tuple(
            (spec, q) for spec, q in self.constraints
        ))
        if self.mode not in (CHANCE, EXPECTATION):
            raise GameDefinitionError(f"unknown mode {self.mode!r}")
        if not self.costs:
            raise GameDefinitionError("a game needs at least one player")
        shape = self.costs[0].shape
        if len(shape) != len(self.costs):
            raise GameDefinitionError(
                f"{len(self.costs)} cost tensors supplied but they have "
                f"{len(shape)} axes; sizes must agree"
            )
        for t in self.costs:
            if t.shape != shape:
                raise ShapeError(f"cost tensor shape {t.shape} != {shape}")
        labels = set()
        for spec, q in self.constraints:
            if q.shape != shape:
                raise ShapeError(
                    f"constraint tensor shape {q.shape} != {shape}"
                )
            if spec.label in labels:
                raise GameDefinitionError(f"duplicate constraint label {spec.label}")
            labels.add(spec.label)
            _validate_constraint_spec(spec, len(shape), self.mode)
            if self.mode == CHANCE:
                d = q.data
                if d.min() < 0.0 or d.max() > 1.0:
                    raise GameDefinitionError(
                        f"chance-mode constraint tensor {spec.label} has "
                        f"entries outside [0, 1]"
                    )

    @property
    def n_players(self) -> int:
        return len(self.costs)

    @property
    def m(self) -> tuple[int, ...]:
        return self.costs[0].shape

    def constraint(self, label: int) -> tuple[ConstraintSpec, DenseTensor]:
        for spec, q in self.constraints:
            if spec.label == label:
                return spec, q
        raise KeyError(f"no constraint with label {label}")


@dataclass(frozen=True)
class MixProfile:
    """Per-player mixing weights; each vector lies on the probability
    simplex (nonnegative, summing to 1 within 1e-8)."""

    weights: tuple[np.ndarray, ...]

    def __post_init__(self):
        ws = []
        for i, w in enumerate(self.weights):
            w = np.array(w, dtype=np.float64)
            if w.ndim != 1 or w.size == 0:
                raise GameDefinitionError(f"weights of player {i} must be a vector")
            if w.min() < -1e-8:
                raise GameDefinitionError(
                    f"weights of player {i} have a negative entry: {w.min()}"
                )
            if abs(w.sum() - 1.0) > 1e-8:
                raise GameDefinitionError(
                    f"weights of player {i} sum to {w.sum()}, not 1"
                )
            w.setflags(write=False)
            ws.append(w)
        object.__setattr__(self, "weights", tuple(ws))

    @property
    def n_players(self) -> int:
        return len(self.weights)

    def __getitem__(self, i: int) -> np.ndarray:
        return self.weights[i]


@dataclass(frozen=True)
class StrategyProfile:
    """Per-player pure strategies: player i holds m_i points in R^{d_i},
    stored as an (m_i, d_i) array."""

    points: tuple[np.ndarray, ...]

    def __post_init__(self):
        ps = []
        for i, p in enumerate(self.points):
            p = np.array(p, dtype=np.float64)
            if p.ndim == 1:
                p = p.reshape(len(p), 1)
            if p.ndim != 2:
                raise GameDefinitionError(
                    f"strategies of player {i} must be an (m_i, d_i) array"
                )
            p.setflags(write=False)
            ps.append(p)
        object.__setattr__(self, "points", tuple(ps))

    @property
    def n_players(self) -> int:
        return len(self.points)

    def __getitem__(self, i: int) -> np.ndarray:
        return self.points[i]


class JointFunction:
    """Scalar function of the concatenated joint pure strategy vector.

    Subclasses implement ``value`` and, when available analytically, ``grad``
    and ``hess`` (the KKT assembly requires both). The ``*_many`` variants
    take a batch of joint vectors (rows) and default to Python loops;
    override them for vectorized evaluation.
    """

    has_derivatives = True

    def value(self, y: np.ndarray) -> float:
        raise NotImplementedError

    def grad(self, y: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def hess(self, y: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def value_many(self, Y: np.ndarray) -> np.ndarray:
        return np.array([self.value(y) for y in Y], dtype=np.float64)

    def grad_many(self, Y: np.ndarray) -> np.ndarray:
        return np.stack([np.asarray(self.grad(y), dtype=np.float64) for y in Y])

    def hess_many(self, Y: np.ndarray) -> np.ndarray:
        return np.stack([np.asarray(self.hess(y), dtype=np.float64) for y in Y])


class Quadratic(JointFunction):
    """0.5 * y'Hy + b'y + c with a constant (symmetrized) Hessian."""

    def __init__(self, H, b=None, c: float = 0.0):
        H = np.asarray(H, dtype=np.float64)
        if H.ndim != 2 or H.shape[0] != H.shape[1]:
            raise GameDefinitionError("H must be a square matrix")
        self.H = 0.5 * (H + H.T)
        self.b = np.zeros(H.shape[0]) if b is None else np.asarray(b, dtype=np.float64)
        if self.b.shape != (H.shape[0],):
            raise GameDefinitionError("b must match the dimension of H")
        self.c = float(c)

    def value(self, y):
        y = np.asarray(y, dtype=np.float64)
        return float(0.5 * y @ (self.H @ y) + self.b @ y + self.c)

    def grad(self, y):
        return self.H @ np.asarray(y, dtype=np.float64) + self.b

    def hess(self, y):
        return self.H

    def value_many(self, Y):
        return 0.5 * ((Y @ self.H) * Y).sum(axis=1) + Y @ self.b + self.c

    def grad_many(self, Y):
        return Y @ self.H + self.b

    def hess_many(self, Y):
        return np.broadcast_to(self.H, (Y.shape[0],) + self.H.shape)


class CallableFunction(JointFunction):
    """Adapter wrapping plain callables; derivatives are optional but the
    KKT assembly rejects games whose functions lack them."""

    def __init__(self, value, grad=None, hess=None):
        self._value = value
        self._grad = grad
        self._hess = hess
        self.has_derivatives = grad is not None and hess is not None

    def value(self, y):
        return float(self._value(np.asarray(y, dtype=np.float64)))

    def grad(self, y):
        if self._grad is None:
            raise GameDefinitionError("no analytic gradient was supplied")
        return np.asarray(self._grad(np.asarray(y, dtype=np.float64)), dtype=np.float64)

    def hess(self, y):
        if self._hess is None:
            raise GameDefinitionError("no analytic Hessian was supplied")
        return np.asarray(self._hess(np.asarray(y, dtype=np.float64)), dtype=np.float64)


@dataclass(frozen=True)
class AugmentedGame:
    """Game whose tensors are generated from continuous pure strategies.

    Player i mixes over m_i strategies, each a point of R^{d_i} inside the
    per-coordinate box [lower_i, upper_i]. Costs and constraints are
    functions of the concatenated joint strategy vector (player blocks in
    order); constraint values pass through the indicator map.
    """

    m: tuple[int, ...]
    dims: tuple[int, ...]
    costs: tuple[JointFunction, ...]
    constraints: tuple[tuple[ConstraintSpec, JointFunction], ...]
    indicator: IndicatorConfig
    lower: tuple[np.ndarray, ...]
    upper: tuple[np.ndarray, ...]

    def __post_init__(self):
        m = tuple(int(v) for v in self.m)
        dims = tuple(int(v) for v in self.dims)
        n = len(m)
        if n < 1 or len(dims) != n or len(self.costs) != n:
            raise GameDefinitionError(
                "m, dims and costs must all have one entry per player"
            )
        if any(v < 1 for v in m) or any(v < 1 for v in dims):
            raise GameDefinitionError("strategy counts and dimensions must be >= 1")
        lows, highs = [], []
        for i in range(n):
            lo = np.asarray(self.lower[i], dtype=np.float64).reshape(-1)
            hi = np.asarray(self.upper[i], dtype=np.float64).reshape(-1)
            if lo.shape != (dims[i],) or hi.shape != (dims[i],):
                raise GameDefinitionError(
                    f"box bounds of player {i} must have dimension {dims[i]}"
                )
            if not (np.isfinite(lo).all() and np.isfinite(hi).all()):
                raise GameDefinitionError("strategy boxes must be finite")
            if not (lo < hi).all():
                raise GameDefinitionError(
                    f"strategy box of player {i} must have lower < upper"
                )
            lo.setflags(write=False)
            hi.setflags(write=False)
            lows.append(lo)
            highs.append(hi)
        labels = set()
        for spec, _ in self.constraints:
            if spec.label in labels:
                raise GameDefinitionError(f"duplicate constraint label {spec.label}")
            labels.add(spec.label)
            _validate_constraint_spec(spec, n, self.indicator.mode)
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "costs", tuple(self.costs))
        object.__setattr__(self, "constraints", tuple(self.constraints))
        object.__setattr__(self, "lower", tuple(lows))
        object.__setattr__(self, "upper", tuple(highs))

    @classmethod
    def build(cls, m, dims, costs, constraints, indicator, box) -> "AugmentedGame":
        """Convenience constructor; ``box`` is a (low, high) pair applied to
        every coordinate, or a per-player sequence of such pairs."""
        m = tuple(int(v) for v in m)
        dims = tuple(int(v) for v in dims)
        n = len(m)
        if (np.ndim(box) == 1 and len(box) == 2) or isinstance(box, tuple) and len(box) == 2 \
                and np.ndim(box[0]) == 0:
            boxes = [(float(box[0]), float(box[1]))] * n
        else:
            boxes = [(float(lo), float(hi)) for lo, hi in box]
        lower = [np.full(dims[i], boxes[i][0]) for i in range(n)]
        upper = [np.full(dims[i], boxes[i][1]) for i in range(n)]
        return cls(m, dims, tuple(costs), tuple(constraints), indicator,
                   tuple(lower), tuple(upper))

    @property
    def n_players(self) -> int:
        return len(self.m)

    @property
    def joint_dim(self) -> int:
        return sum(self.dims)

    @property
    def offsets(self) -> tuple[int, ...]:
        """Start of each player's block in the joint strategy vector."""
        out, acc = [], 0
        for d in self.dims:
            out.append(acc)
            acc += d
        return tuple(out)

    @property
    def joint_count(self) -> int:
        """Number of joint pure strategies."""
        out = 1
        for v in self.m:
            out *= v
        return out

    def validate_strategies(self, profile: StrategyProfile) -> None:
        if profile.n_players != self.n_players:
            raise GameDefinitionError("strategy profile has the wrong player count")
        for i, pts in enumerate(profile.points):
            if pts.shape != (self.m[i], self.dims[i]):
                raise GameDefinitionError(
                    f"player {i} strategies must have shape "
                    f"({self.m[i]}, {self.dims[i]}), got {pts.shape}"
                )
            if (pts < self.lower[i] - 1e-8).any() or (pts > self.upper[i] + 1e-8).any():
                raise GameDefinitionError(
                    f"player {i} has a strategy outside its box"
                )

    def joint_matrix(self, points: Sequence[np.ndarray]) -> np.ndarray:
        """All joint strategy vectors as rows, in row-major joint-index order."""
        idx = np.indices(self.m).reshape(self.n_players, -1)
        Y = np.empty((idx.shape[1], self.joint_dim))
        for i, off in enumerate(self.offsets):
            Y[:, off:off + self.dims[i]] = np.asarray(points[i])[idx[i]]
        return Y


def lift(game: AugmentedGame, s: StrategyProfile) -> TensorGame:
    """Freeze the pure strategies: evaluate all cost and constraint functions
    on every joint strategy, producing the finite tensor game."""
    game.validate_strategies(s)
    per_player = [list(pts) for pts in s.points]

    def tensor_of(fn: JointFunction) -> DenseTensor:
        return fill_from(lambda *pts: fn.value(np.concatenate(pts)), per_player)

    costs = tuple(tensor_of(f) for f in game.costs)
    constraints = []
    for spec, g in game.constraints:
        raw = tensor_of(g)
        q = DenseTensor(indicator_value(game.indicator.mode, game.indicator.omega,
                                        raw.array))
        constraints.append((spec, q))
    return TensorGame(costs, tuple(constraints), mode=game.indicator.mode)


def constraint_satisfaction(game: TensorGame, x, label: int) -> float:
    """Expected constraint-tensor value under the mixed profile. With
    Boolean-like chance tensors this is the probability that the realized
    joint strategy is feasible."""
    weights = x.weights if isinstance(x, MixProfile) else x
    _, q = game.constraint(label)
    return full_contract(q, weights)
