"""Semismooth Newton solver for box-constrained mixed complementarity
problems.

The complementarity conditions are recast through the Fischer-Burmeister
function phi(a, b) = a + b - sqrt(a^2 + b^2), whose zeros are exactly the
points with a >= 0, b >= 0, a*b = 0. The recast residual is driven to zero
by Newton steps with a backtracking line search on its squared norm, a
gradient fallback for singular or non-descending steps, and seeded restarts
from perturbed starting points.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .kkt import MCPInstance

CONVERGED = "converged"
MAX_ITERATIONS = "max_iterations"
SINGULAR_FAILURE = "singular_failure"
RESTART_EXHAUSTED = "restart_exhausted"

_KINK = 1e-12
_PIVOT_TOL = 1e-12
_MAX_BACKTRACKS = 25


@dataclass(frozen=True)
class SolverOptions:
    tolerance: float = 1e-8
    max_iterations: int = 200
    backtrack_factor: float = 0.5
    sufficient_decrease: float = 1e-4
    max_restarts: int = 5
    perturbation: float = 0.1

    def __post_init__(self):
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if self.max_iterations < 1 or self.max_restarts < 0:
            raise ValueError("iteration and restart counts must be >= 1 and >= 0")
        if not 0 < self.backtrack_factor < 1:
            raise ValueError("backtrack factor must lie in (0, 1)")
        if not 0 < self.sufficient_decrease < 1:
            raise ValueError("sufficient-decrease constant must lie in (0, 1)")


@dataclass
class SolveOutcome:
    """Final state of one solve. ``converged`` guarantees the residual norm
    is within tolerance and the point lies inside its bounds."""

    status: str
    z: np.ndarray
    residual_norm: float
    iterations: int

    @property
    def converged(self) -> bool:
        return self.status == CONVERGED


def fischer_burmeister(a, b):
    """phi(a, b) = a + b - sqrt(a^2 + b^2); zero iff a, b >= 0 and a*b = 0."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    return a + b - np.hypot(a, b)


def _fb_grad(a, b):
    """Partial derivatives of phi; the kink at the origin uses the
    generalized-Jacobian element from perturbing (a, b) by (1e-12, 1e-12)."""
    a = np.asarray(a, dtype=np.float64).copy()
    b = np.asarray(b, dtype=np.float64).copy()
    kink = (np.abs(a) < _KINK) & (np.abs(b) < _KINK)
    a[kink] = _KINK
    b[kink] = _KINK
    r = np.hypot(a, b)
    return 1.0 - a / r, 1.0 - b / r


class _Reformulation:
    """Bound classification for one MCP, computed once per solve."""

    __slots__ = ("mcp", "free", "low", "up", "both")

    def __init__(self, mcp):
        self.mcp = mcp
        lo = np.isfinite(mcp.lower)
        hi = np.isfinite(mcp.upper)
        self.free = ~lo & ~hi
        self.low = lo & ~hi
        self.up = ~lo & hi
        self.both = lo & hi

    def phi(self, z):
        mcp = self.mcp
        Fz = np.asarray(mcp.residual(z), dtype=np.float64)
        out = np.empty_like(Fz)
        free, low, up, both = self.free, self.low, self.up, self.both
        out[free] = Fz[free]
        if low.any():
            out[low] = fischer_burmeister(z[low] - mcp.lower[low], Fz[low])
        if up.any():
            out[up] = -fischer_burmeister(mcp.upper[up] - z[up], -Fz[up])
        if both.any():
            inner = fischer_burmeister(z[both] - mcp.lower[both], Fz[both])
            out[both] = -fischer_burmeister(mcp.upper[both] - z[both], -inner)
        return out

    def phi_and_jacobian(self, z):
        mcp = self.mcp
        Fz = np.asarray(mcp.residual(z), dtype=np.float64)
        J = np.asarray(mcp.jacobian(z), dtype=np.float64)
        free, low, up, both = self.free, self.low, self.up, self.both
        out = np.empty_like(Fz)
        out[free] = Fz[free]
        alpha = np.zeros_like(Fz)   # coefficient on the identity
        beta = np.zeros_like(Fz)    # coefficient on rows of J
        beta[free] = 1.0
        if low.any():
            a = z[low] - mcp.lower[low]
            out[low] = fischer_burmeister(a, Fz[low])
            alpha[low], beta[low] = _fb_grad(a, Fz[low])
        if up.any():
            a = mcp.upper[up] - z[up]
            out[up] = -fischer_burmeister(a, -Fz[up])
            alpha[up], beta[up] = _fb_grad(a, -Fz[up])
        if both.any():
            ai = z[both] - mcp.lower[both]
            inner = fischer_burmeister(ai, Fz[both])
            dai, dbi = _fb_grad(ai, Fz[both])
            ao = mcp.upper[both] - z[both]
            out[both] = -fischer_burmeister(ao, -inner)
            da, db = _fb_grad(ao, -inner)
            alpha[both] = da + db * dai
            beta[both] = db * dbi
        JPhi = beta[:, None] * J
        JPhi[np.diag_indices_from(JPhi)] += alpha
        return out, JPhi


def reformulated_residual(mcp: MCPInstance, z: np.ndarray) -> np.ndarray:
    """Equation reformulation of the complementarity conditions; zero exactly
    at MCP solutions. Free rows pass the raw residual through; bounded rows
    go through the Fischer-Burmeister function (composed once per bound for
    two-sided rows)."""
    return _Reformulation(mcp).phi(np.asarray(z, dtype=np.float64))


def _restart_point(mcp, z0, rng, scale):
    z = z0.copy()
    if mcp.layout is None:
        primal = np.ones(z.size, dtype=bool)
    else:
        primal = mcp.layout.primal_mask()
    # perturbation is relative to the box width where one exists
    width = mcp.upper - mcp.lower
    width = np.where(np.isfinite(width), width, 1.0)
    z[primal] += rng.uniform(-scale, scale, int(primal.sum())) * width[primal]
    z[~primal] = 0.0
    z = np.clip(z, mcp.lower, mcp.upper)
    if mcp.layout is not None:
        # keep restarted weights strictly inside the simplex; clipping at the
        # zero bound would start the attempt on the degenerate manifold
        layout = mcp.layout
        for i in range(layout.n_players):
            sl = layout.x_slice(i)
            w = np.maximum(z[sl], 0.05)
            z[sl] = w / w.sum()
    return z


def _lu_direction(JPhi, phi):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        lu, piv = scipy.linalg.lu_factor(JPhi, check_finite=False)
    if np.abs(np.diag(lu)).min() < _PIVOT_TOL:
        return None
    return scipy.linalg.lu_solve((lu, piv), -phi, check_finite=False)


def _attempt(mcp, z, opts, reform=None):
    """One Newton run from a fixed start. Returns (reason, z, norm, iters)."""
    reform = reform or _Reformulation(mcp)
    lower, upper = mcp.lower, mcp.upper
    theta_fn = lambda v: 0.5 * float(v @ v)
    phi = reform.phi(z)
    best_norm = np.inf
    stagnant = 0
    for it in range(opts.max_iterations):
        norm = float(np.abs(phi).max()) if phi.size else 0.0
        if norm <= opts.tolerance:
            return CONVERGED, z, norm, it
        # degenerate strategies (weight pinned at zero) make the system
        # structurally singular, so very slow progress means a dead basin
        if norm < best_norm * (1.0 - 1e-3):
            best_norm = norm
            stagnant = 0
        else:
            stagnant += 1
            if stagnant >= 20:
                return "stalled", z, norm, it
        phi, JPhi = reform.phi_and_jacobian(z)
        grad = JPhi.T @ phi
        directions = []
        singular = False
        try:
            newton = _lu_direction(JPhi, phi)
            if newton is None:
                singular = True
                # ridge retry keeps Newton-like progress on singular systems
                ridge = max(1e-10, min(1e-4, norm))
                newton = _lu_direction(
                    JPhi + ridge * np.eye(JPhi.shape[0]), phi)
            if newton is not None:
                directions.append(newton)
        except (scipy.linalg.LinAlgError, ValueError):
            singular = True
        gnorm = float(np.abs(grad).max())
        if gnorm > 1e-14:
            directions.append(-grad)
        if not directions:
            reason = SINGULAR_FAILURE if singular else "stalled"
            return reason, z, norm, it + 1

        theta0 = theta_fn(phi)
        accepted = False
        for d in directions:
            slope = float(grad @ d)
            # a Newton direction can reduce the merit even where the slope
            # test rejects it (degenerate rows); plain decrease suffices then
            plain = slope >= 0.0
            if plain and d is not directions[0]:
                continue
            t = 1.0
            for _ in range(_MAX_BACKTRACKS):
                z_new = np.clip(z + t * d, lower, upper)
                phi_new = reform.phi(z_new)
                theta_new = theta_fn(phi_new)
                good = theta_new <= (1.0 - opts.sufficient_decrease * t) * theta0 \
                    if plain else \
                    theta_new <= theta0 + opts.sufficient_decrease * t * slope
                if good:
                    z, phi = z_new, phi_new
                    accepted = True
                    break
                t *= opts.backtrack_factor
            if accepted:
                break
        if not accepted:
            reason = SINGULAR_FAILURE if singular else "stalled"
            return reason, z, float(np.abs(phi).max()), it + 1
    return MAX_ITERATIONS, z, float(np.abs(phi).max()), opts.max_iterations


def solve(mcp: MCPInstance, z0, opts: SolverOptions | None = None,
          seed=0) -> SolveOutcome:
    """Solve the MCP starting from ``z0`` (projected into the bounds).

    On failure of the initial run the solver restarts up to
    ``opts.max_restarts`` times from the projected start plus a seeded
    uniform perturbation of the primal segments (duals restart at zero).
    The outcome status is ``max_iterations`` when every run exhausted its
    iteration budget, ``singular_failure`` when every run died on a singular
    system with no usable gradient step, and ``restart_exhausted`` otherwise.
    """
    opts = opts or SolverOptions()
    rng = np.random.default_rng(seed)
    z_init = np.clip(np.asarray(z0, dtype=np.float64), mcp.lower, mcp.upper)

    reform = _Reformulation(mcp)
    reasons = []
    best = None
    total_iters = 0
    for attempt in range(opts.max_restarts + 1):
        # the perturbation doubles per restart so later attempts can leave
        # the basin the starting point fell into
        scale = opts.perturbation * 2.0 ** (attempt - 1)
        z_start = z_init if attempt == 0 else _restart_point(
            mcp, z_init, rng, scale)
        reason, z, norm, iters = _attempt(mcp, z_start, opts, reform)
        total_iters += iters
        if best is None or norm < best[1]:
            best = (z, norm)
        if reason == CONVERGED:
            return SolveOutcome(CONVERGED, z, norm, total_iters)
        reasons.append(reason)

    if all(r == MAX_ITERATIONS for r in reasons):
        status = MAX_ITERATIONS
    elif all(r == SINGULAR_FAILURE for r in reasons):
        status = SINGULAR_FAILURE
    else:
        status = RESTART_EXHAUSTED
    return SolveOutcome(status, best[0], best[1], total_iters)
