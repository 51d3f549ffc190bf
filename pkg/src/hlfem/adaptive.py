"""The adaptive driver: stabilized solve, error control, split-region
marking, bisection, repeat.

Each iteration searches for the loss-minimizing regularization weight on
the current mesh, evaluates the relative-to-source error over the region
left of the boundary layer, and (if above tolerance) bisects the elements
whose indicator exceeds theta times the regional maximum -- separately for
the regions outside and inside the layer, so layer refinement cannot starve
the smooth region.  The layer separator is fixed once, at the pre-last node
of the initial mesh, and bisection never removes nodes, so it stays a node
for the whole run.

A classical baseline with the regularization weight pinned at zero (plain
Galerkin each iteration, no parameter search, no counted quantum calls)
uses the same indicator and marking for comparison runs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .assembly import FemField, ProblemCoefficients, assemble_regularized
from .cauchy import ReducedSolution, solve_reduced
from .estimator import global_error_percent, order_of_convergence
from .mesh import Mesh1D, bisect_elements, partition_left_right, uniform_mesh
from .solver import SolveBackend, thomas_solve
from .stabilize import lambda_max, quantum_stabilized_solution

__all__ = [
    "AdaptConfig",
    "AdaptIteration",
    "AdaptiveResult",
    "AdaptivityError",
    "mark_for_refinement",
    "run_hlambda_adaptive",
    "run_h_adaptive_baseline",
]

_MIN_REDUCED_RESOLUTION = 4096


@dataclass(frozen=True)
class AdaptIteration:
    """One convergence-table row."""

    index: int
    dof: int
    accumulated_dof: int
    error_percent: float
    lambda_star: float
    quantum_calls: int | None
    order: float | None


@dataclass
class AdaptConfig:
    """Driver parameters (initial element count, tolerance, marking)."""

    N: int
    tol_percent: float
    theta: float = 2.0 / 3.0
    lambda_tol: float = 1.0
    reuse_lambda_max: bool = True
    max_iterations: int = 25
    layer_side: str = "right"
    loss_mode: str = "stencil"

    def __post_init__(self):
        if self.N < 2:
            raise ValueError("initial mesh needs at least 2 elements")
        if not self.tol_percent > 0.0:
            raise ValueError("error tolerance must be positive")
        if not 0.0 < self.theta <= 1.0:
            raise ValueError("marking threshold theta must lie in (0, 1]")
        if not self.lambda_tol > 0.0:
            raise ValueError("parameter-search tolerance must be positive")
        if self.max_iterations < 1:
            raise ValueError("iteration cap must be positive")
        if self.layer_side not in ("left", "right"):
            raise ValueError("layer_side must be 'left' or 'right'")


@dataclass(frozen=True)
class AdaptiveResult:
    """Iteration history plus the per-iteration and final fields."""

    iterations: list[AdaptIteration]
    final_field: FemField
    fields: list[FemField] = field(default_factory=list)


class AdaptivityError(RuntimeError):
    """Non-termination (cap or stagnation); carries the partial history."""

    def __init__(self, message: str, iterations: list[AdaptIteration], fields: list[FemField]):
        super().__init__(message)
        self.iterations = iterations
        self.fields = fields


def mark_for_refinement(eta: np.ndarray, region: np.ndarray, theta: float) -> np.ndarray:
    """Elements of the region with eta strictly above theta times its max."""
    region = np.asarray(region, dtype=int)
    if region.size == 0:
        return np.empty(0, dtype=int)
    eta = np.asarray(eta, dtype=float)
    threshold = theta * float(np.max(eta[region]))
    return region[eta[region] > threshold]


def _ensure_reduced(c: ProblemCoefficients, mesh: Mesh1D, current: ReducedSolution | None):
    """Keep the reduced-solution grid at least 8x finer than the mesh."""
    needed = max(_MIN_REDUCED_RESOLUTION, 8 * mesh.element_count)
    if current is None or current.resolution < needed:
        return solve_reduced(c, needed)
    return current


def _layer_node(mesh: Mesh1D, layer_side: str) -> float:
    return float(mesh.nodes[-2] if layer_side == "right" else mesh.nodes[1])


def run_hlambda_adaptive(
    c: ProblemCoefficients, cfg: AdaptConfig, backend: SolveBackend
) -> AdaptiveResult:
    """Run the stabilized adaptive loop until the error tolerance is met.

    With ``reuse_lambda_max`` the previous optimal parameter becomes the
    next search bound, which shrinks the call budget as the mesh refines
    (the optimal weight is expected to decrease with better resolution).
    """
    mesh = uniform_mesh(cfg.N, *c.domain)
    x_layer = _layer_node(mesh, cfg.layer_side)
    lam_max = lambda_max(c, cfg.N)
    u0 = _ensure_reduced(c, mesh, None) if lam_max > 0.0 else None

    history: list[AdaptIteration] = []
    fields: list[FemField] = []
    accumulated = 0
    prev_eta = prev_dof = None
    for index in range(1, cfg.max_iterations + 1):
        if lam_max > 0.0:
            u0 = _ensure_reduced(c, mesh, u0)
        result = quantum_stabilized_solution(
            mesh, c, u0, lam_max, backend, x_layer, cfg.layer_side, cfg.lambda_tol, cfg.loss_mode
        )
        partition = partition_left_right(mesh, x_layer)
        breakdown = global_error_percent(c, result.lambda_star, u0, result.field, partition)
        accumulated += mesh.dof
        order = None
        if prev_eta is not None and breakdown.eta_left_abs > 0.0 and prev_eta > 0.0:
            order = order_of_convergence(prev_eta, breakdown.eta_left_abs, prev_dof, mesh.dof)
        history.append(
            AdaptIteration(
                index=index,
                dof=mesh.dof,
                accumulated_dof=accumulated,
                error_percent=breakdown.error_percent,
                lambda_star=result.lambda_star,
                quantum_calls=result.quantum_calls,
                order=order,
            )
        )
        fields.append(result.field)
        if breakdown.error_percent < cfg.tol_percent:
            return AdaptiveResult(iterations=history, final_field=result.field, fields=fields)
        marked = np.concatenate(
            [
                mark_for_refinement(breakdown.eta, partition.left_elements, cfg.theta),
                mark_for_refinement(breakdown.eta, partition.right_elements, cfg.theta),
            ]
        )
        if marked.size == 0:
            raise AdaptivityError(
                "marking stagnated: no element exceeds the regional threshold", history, fields
            )
        prev_eta, prev_dof = breakdown.eta_left_abs, mesh.dof
        mesh = bisect_elements(mesh, marked)
        if cfg.reuse_lambda_max:
            lam_max = result.lambda_star
    raise AdaptivityError(
        f"error tolerance not reached within {cfg.max_iterations} iterations", history, fields
    )


def run_h_adaptive_baseline(c: ProblemCoefficients, cfg: AdaptConfig) -> AdaptiveResult:
    """Classical h-adaptivity: regularization weight fixed at zero, no
    parameter search, and classical single-threshold marking.

    Marking compares every element against theta times the global indicator
    maximum (the split-region rule is the stabilized scheme's own device for
    keeping layer refinement in check).  The reported error still excludes
    the layer region.
    """
    mesh = uniform_mesh(cfg.N, *c.domain)
    x_layer = _layer_node(mesh, cfg.layer_side)

    history: list[AdaptIteration] = []
    fields: list[FemField] = []
    accumulated = 0
    prev_eta = prev_dof = None
    for index in range(1, cfg.max_iterations + 1):
        system = assemble_regularized(mesh, c, 0.0, None)
        approx = FemField.from_interior(mesh, thomas_solve(system))
        partition = partition_left_right(mesh, x_layer)
        breakdown = global_error_percent(c, 0.0, None, approx, partition)
        accumulated += mesh.dof
        order = None
        if prev_eta is not None and breakdown.eta_left_abs > 0.0 and prev_eta > 0.0:
            order = order_of_convergence(prev_eta, breakdown.eta_left_abs, prev_dof, mesh.dof)
        history.append(
            AdaptIteration(
                index=index,
                dof=mesh.dof,
                accumulated_dof=accumulated,
                error_percent=breakdown.error_percent,
                lambda_star=0.0,
                quantum_calls=None,
                order=order,
            )
        )
        fields.append(approx)
        if breakdown.error_percent < cfg.tol_percent:
            return AdaptiveResult(iterations=history, final_field=approx, fields=fields)
        marked = mark_for_refinement(
            breakdown.eta, np.arange(mesh.element_count), cfg.theta
        )
        if marked.size == 0:
            raise AdaptivityError(
                "marking stagnated: no element exceeds the threshold", history, fields
            )
        prev_eta, prev_dof = breakdown.eta_left_abs, mesh.dof
        mesh = bisect_elements(mesh, marked)
    raise AdaptivityError(
        f"error tolerance not reached within {cfg.max_iterations} iterations", history, fields
    )
