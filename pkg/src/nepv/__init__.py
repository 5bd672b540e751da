"""Solvers for eigenvalue problems with eigenvector nonlinearity, ``A(V) V = V S``."""

from .analysis import estimate_order, jacobian_diagnostics, single_step_study
from .core import NepvProblem, SubspaceIterate, fixed_point_jacobian, residual, subspace_error
from .problems import GpeProblem, HeavisideTraceProblem, ScalarSineProblem
from .solvers import SelectionStrategy, SolverConfig, reference_solution, solve

__version__ = "0.1.0"

__all__ = [
    "NepvProblem",
    "SubspaceIterate",
    "residual",
    "fixed_point_jacobian",
    "subspace_error",
    "ScalarSineProblem",
    "GpeProblem",
    "HeavisideTraceProblem",
    "SelectionStrategy",
    "SolverConfig",
    "solve",
    "reference_solution",
    "estimate_order",
    "single_step_study",
    "jacobian_diagnostics",
]
