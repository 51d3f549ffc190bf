"""Adaptive stabilized FEM for 1D advection-diffusion-reaction problems.

The package solves singularly perturbed two-point boundary value problems
by combining a Tikhonov-style regularization toward the reduced (zero
diffusion) solution, a loss-driven search for the regularization weight, a
bubble-weighted residual error indicator, and split-region mesh bisection.
The loss evaluations can be routed through an emulated quantum path
(statevector HHL plus SWAP-test overlap estimation) with per-call
accounting.
"""

from .adaptive import (
    AdaptConfig,
    AdaptIteration,
    AdaptiveResult,
    AdaptivityError,
    mark_for_refinement,
    run_h_adaptive_baseline,
    run_hlambda_adaptive,
)
from .assembly import (
    FemField,
    ProblemCoefficients,
    TridiagonalSystem,
    assemble_regularized,
    evaluate_field,
    peclet,
    sobolev_inner_product,
)
from .cauchy import ReducedSolution, eval_reduced, solve_reduced
from .estimator import (
    ErrorBreakdown,
    energy_norm_regularized,
    eta_element,
    eta_profile,
    global_error_percent,
    order_of_convergence,
    residual_at,
    theorem1_bound,
    vnorm_error_vs_reference,
)
from .expr import (
    DifferentiationError,
    EvaluationError,
    Expression,
    ExpressionError,
    differentiate,
    eval_expr,
    parse_expr,
    to_string,
)
from .mesh import Mesh1D, RegionPartition, bisect_elements, partition_left_right, uniform_mesh
from .quantum import (
    HhlConfig,
    QuantumState,
    amplitude_encode,
    hhl_statevector_solve,
    quantum_H_evaluation,
    swap_test_estimate,
)
from .solver import SingularSystemError, SolveBackend, backend_solve, thomas_solve
from .stabilize import (
    LossWeights,
    StabilizationResult,
    build_loss_weights,
    divided_difference2,
    lambda_max,
    loss_F_uniform,
    loss_H,
    minimize_loss,
    quantum_stabilized_solution,
)

__version__ = "0.1.0"
