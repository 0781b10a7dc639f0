"""Optimal policies for finite-horizon MDPs with sequentially observed transitions."""

from .bench import Comparison, GridConfig, compare_values, make_grid_world
from .estimators import SequentialMDPSolver, StandardMDPSolver
from .lp import CanonicalLp, LpError, LpResult, LpStatus, solve_lp
from .model import (
    InvalidModelError,
    ModelSpec,
    SequentialPolicy,
    StandardPolicy,
    ValueTable,
    action_choice_probs,
    check_model,
    embed_standard,
    evaluate_policy_exact,
    evaluate_standard_exact,
    load_model,
    propagate,
    q_value,
    transition_column,
    validate_model,
)
from .sequential import (
    backward_induction_sequential,
    brute_force_phase_value,
    build_H,
    build_lp,
    phase_recursion_value,
    recover_policy,
    solve_sequential,
    x_from_p,
)
from .sim import estimate_value, rollout
from .standard import backward_induction_standard

__version__ = "0.1.0"

__all__ = [
    "CanonicalLp", "Comparison", "GridConfig", "InvalidModelError", "LpError", "LpResult",
    "LpStatus", "ModelSpec", "SequentialMDPSolver", "SequentialPolicy", "StandardMDPSolver",
    "StandardPolicy", "ValueTable", "action_choice_probs", "backward_induction_sequential",
    "backward_induction_standard", "brute_force_phase_value", "build_H", "build_lp",
    "check_model", "compare_values", "embed_standard", "estimate_value",
    "evaluate_policy_exact", "evaluate_standard_exact", "load_model", "make_grid_world",
    "phase_recursion_value", "propagate", "q_value", "recover_policy", "rollout", "solve_lp",
    "solve_sequential",
    "transition_column", "validate_model", "x_from_p",
]
