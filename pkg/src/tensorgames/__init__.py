"""Equilibria for N-player tensor games with tensor constraints.

Mixed-strategy generalized Nash equilibria are computed over both the mixing
weights and the continuous pure strategies; shared chance constraints are
softened into sigmoids and iteratively tightened toward the exact Boolean
indicator. The underlying mixed complementarity problems are solved with a
semismooth Newton method on the Fischer-Burmeister reformulation.
"""

from .tensors import (
    DenseTensor,
    ShapeError,
    contract_except,
    contract_except_pair,
    fill_from,
    full_contract,
)
from .games import (
    CHANCE,
    EXPECTATION,
    AugmentedGame,
    CallableFunction,
    ConstraintSpec,
    GameDefinitionError,
    IndicatorConfig,
    JointFunction,
    MixProfile,
    Quadratic,
    StrategyProfile,
    TensorGame,
    constraint_satisfaction,
    indicator_apply,
    lift,
)
from .kkt import MCPInstance, VariableLayout, assemble_augmented_mcp, assemble_weight_mcp
from .mcp import (
    CONVERGED,
    SolveOutcome,
    SolverOptions,
    fischer_burmeister,
    reformulated_residual,
    solve,
)
from .tighten import FAILED, SOLVED, Solution, TighteningConfig, iterative_tighten
from .evaluate import (
    EvaluationReport,
    evaluate_solution,
    expected_cost,
    improvement_probe,
    kkt_residual,
    min_supported_distance,
    realized_feasibility,
)
from . import backends, scenarios

__version__ = "0.1.0"
