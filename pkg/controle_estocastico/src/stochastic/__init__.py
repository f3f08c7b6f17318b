from .backward_solver import BackwardSolution, backward_step, solve_backward
from .coefficients import Coefficients, build_coefficients
from .forward_solver import ControlPair, ForwardSolution, forward_step, region_mask, solve_forward
from .noise_tree import AdaptedField, ScenarioTree, build_tree, expectation, martingale_coeff

__all__ = [
    "AdaptedField",
    "BackwardSolution",
    "Coefficients",
    "ControlPair",
    "ForwardSolution",
    "ScenarioTree",
    "backward_step",
    "build_coefficients",
    "build_tree",
    "expectation",
    "forward_step",
    "martingale_coeff",
    "region_mask",
    "solve_backward",
    "solve_forward",
]
