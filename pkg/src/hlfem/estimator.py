"""A posteriori error estimation for the regularized problem.

With linear elements the approximation's second derivative vanishes inside
every element, so the strong-form residual reduces to

    R(x) = f + lam*u0 - lam*u0'' - beta*u_h' - (sigma + lam)*u_h.

The per-element indicator combines the regularization distance to the
reduced solution with the residual weighted by the quadratic bubble
w_K(x) = (x_i - x)(x - x_{i-1}):

    eta_K = (1/alpha) * sqrt(2*lam^2*||u0 - u_h||_K^2
                             + 4*||sqrt(w_K)*R||_{L2(K)}^2),

where alpha = min(mu, sigma) and ||.||_K is the per-element H1 norm.  The
sum of eta_K^2 over all elements bounds the squared H1 error; the reported
percentage error divides the left-region sum by the source norm there.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss

from .assembly import (
    GAUSS_5,
    FemField,
    ProblemCoefficients,
    element_quadrature,
    evaluate_field,
)
from .expr import eval_expr
from .mesh import Mesh1D, RegionPartition

__all__ = [
    "ErrorBreakdown",
    "residual_at",
    "eta_element",
    "eta_profile",
    "global_error_percent",
    "theorem1_bound",
    "order_of_convergence",
    "vnorm_error_vs_reference",
    "energy_norm_regularized",
]

GAUSS_7 = leggauss(7)


def _alpha(c: ProblemCoefficients) -> float:
    alpha = min(c.mu, c.sigma)
    if alpha <= 0.0:
        raise ValueError("error indicator requires min(mu, sigma) > 0; set sigma > 0")
    return alpha


@dataclass(frozen=True)
class ErrorBreakdown:
    """Per-element indicators plus the aggregated error measures."""

    eta: np.ndarray
    alpha: float
    error_percent: float
    eta_left_abs: float
    partition: RegionPartition


def residual_at(c: ProblemCoefficients, lam: float, u0, field: FemField, x):
    """Strong-form residual of the regularized equation at points x."""
    value, slope = evaluate_field(field, x)
    beta_x = eval_expr(c.beta, x)
    f_x = eval_expr(c.f, x)
    r = f_x - beta_x * slope - (c.sigma + lam) * value
    if lam > 0.0:
        u0_x, _, d2_x = u0.evaluate(x)
        r = r + lam * (u0_x - d2_x)
    return r


def eta_profile(c: ProblemCoefficients, lam: float, u0, field: FemField) -> np.ndarray:
    """All per-element indicators in one vectorized sweep (7-point Gauss)."""
    alpha = _alpha(c)
    if lam > 0.0 and u0 is None:
        raise ValueError("a reduced solution is required when lam > 0")
    mesh = field.mesh
    pts, wts = element_quadrature(mesh, GAUSS_7)
    xl = mesh.nodes[:-1][:, None]
    xr = mesh.nodes[1:][:, None]
    slopes = field.slopes[:, None]
    values = field.values[:-1][:, None] + (pts - xl) * slopes

    beta_q = eval_expr(c.beta, pts)
    f_q = eval_expr(c.f, pts)
    residual = f_q - beta_q * slopes - (c.sigma + lam) * values
    distance_sq = np.zeros(mesh.element_count)
    if lam > 0.0:
        u0_q, d1_q, d2_q = u0.evaluate(pts)
        residual = residual + lam * (u0_q - d2_q)
        distance_sq = np.sum(wts * ((u0_q - values) ** 2 + (d1_q - slopes) ** 2), axis=1)
    bubble = (xr - pts) * (pts - xl)
    bubble_sq = np.sum(wts * bubble * residual**2, axis=1)
    return np.sqrt(2.0 * lam**2 * distance_sq + 4.0 * bubble_sq) / alpha


def eta_element(c: ProblemCoefficients, lam: float, u0, field: FemField, element: int) -> float:
    """Indicator of a single element."""
    if not 0 <= element < field.mesh.element_count:
        raise IndexError(f"element index {element} out of range")
    return float(eta_profile(c, lam, u0, field)[element])


def source_norm_sq_per_element(c: ProblemCoefficients, mesh: Mesh1D) -> np.ndarray:
    """Per-element squared L2 norm of the source term (5-point Gauss)."""
    pts, wts = element_quadrature(mesh, GAUSS_5)
    return np.sum(wts * eval_expr(c.f, pts) ** 2, axis=1)


def global_error_percent(
    c: ProblemCoefficients, lam: float, u0, field: FemField, partition: RegionPartition
) -> ErrorBreakdown:
    """Relative-to-source error over the region left of the boundary layer.

    Error = 100 * sqrt(sum_{K in Left} eta_K^2 / sum_{K in Left} ||f||_K^2);
    the layer-side elements are excluded because no approximation quality is
    expected inside the layer.
    """
    eta = eta_profile(c, lam, u0, field)
    left = partition.left_elements
    source_sq = float(np.sum(source_norm_sq_per_element(c, field.mesh)[left]))
    if source_sq <= 0.0:
        raise ValueError("source norm vanishes left of the layer; relative error undefined")
    eta_left_sq = float(np.sum(eta[left] ** 2))
    return ErrorBreakdown(
        eta=eta,
        alpha=_alpha(c),
        error_percent=100.0 * float(np.sqrt(eta_left_sq / source_sq)),
        eta_left_abs=float(np.sqrt(eta_left_sq)),
        partition=partition,
    )


def theorem1_bound(c: ProblemCoefficients, lam: float, u0, field: FemField) -> float:
    """Global squared-error bound: sum of eta_K^2 over all elements."""
    eta = eta_profile(c, lam, u0, field)
    return float(np.sum(eta**2))


def order_of_convergence(eta1: float, eta2: float, n1: int, n2: int) -> float:
    """Observed order -(ln eta2 - ln eta1)/(ln n2 - ln n1)."""
    if eta1 <= 0.0 or eta2 <= 0.0:
        raise ValueError("error estimates must be positive")
    if not n2 > n1 >= 1:
        raise ValueError("need n2 > n1 >= 1")
    return -float((np.log(eta2) - np.log(eta1)) / (np.log(n2) - np.log(n1)))


def _union_quadrature(mesh_a: Mesh1D, mesh_b: Mesh1D):
    if abs(mesh_a.a - mesh_b.a) > 1e-12 or abs(mesh_a.b - mesh_b.b) > 1e-12:
        raise ValueError("fields live on mismatched domains")
    nodes = np.union1d(mesh_a.nodes, mesh_b.nodes)
    xi, w = GAUSS_5
    xl = nodes[:-1][:, None]
    h = np.diff(nodes)[:, None]
    pts = xl + 0.5 * h * (xi[None, :] + 1.0)
    return pts, 0.5 * h * w[None, :]


def vnorm_error_vs_reference(field: FemField, reference: FemField) -> float:
    """H1-norm distance between two fields, integrated on the union mesh."""
    pts, wts = _union_quadrature(field.mesh, reference.mesh)
    fv, fs = evaluate_field(field, pts)
    rv, rs = evaluate_field(reference, pts)
    return float(np.sqrt(np.sum(wts * ((rv - fv) ** 2 + (rs - fs) ** 2))))


def energy_norm_regularized(c: ProblemCoefficients, lam: float, field: FemField) -> float:
    """Regularized energy norm sqrt(a(v, v) + lam*(v, v)_V) of a field."""
    if lam < 0.0:
        raise ValueError("regularization parameter must be nonnegative")
    pts, wts = element_quadrature(field.mesh, GAUSS_5)
    xl = field.mesh.nodes[:-1][:, None]
    slopes = field.slopes[:, None]
    values = field.values[:-1][:, None] + (pts - xl) * slopes
    beta_q = eval_expr(c.beta, pts)
    integrand = (
        c.mu * slopes**2
        + beta_q * slopes * values
        + c.sigma * values**2
        + lam * (values**2 + slopes**2)
    )
    return float(np.sqrt(np.sum(wts * integrand)))
