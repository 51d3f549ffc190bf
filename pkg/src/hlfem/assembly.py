"""Galerkin assembly of the regularized advection-diffusion-reaction problem
on linear (hat-function) elements.

The weak form on [a, b] with homogeneous Dirichlet data reads

    a(u, v) + lam*(u, v)_V = (f, v) + lam*(u0, v)_V,
    a(u, v) = int(mu*u'v' + beta*u'v + sigma*uv),
    (u, v)_V = int(uv + u'v'),

assembled into a tridiagonal system over the interior nodes.  Polynomial
terms with constant coefficients use 2-point Gauss quadrature (exact);
terms carrying beta(x), f(x) or the reduced solution u0 use 5-point Gauss.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss

from .expr import Expression, differentiate, eval_expr, parse_expr
from .mesh import Mesh1D

__all__ = [
    "ProblemCoefficients",
    "FemField",
    "TridiagonalSystem",
    "DegenerateElementError",
    "peclet",
    "assemble_regularized",
    "sobolev_inner_product",
    "evaluate_field",
]

GAUSS_2 = leggauss(2)
GAUSS_5 = leggauss(5)

_MIN_ELEMENT_LENGTH = 1e-14
_BETA_SAMPLES = 1024


class DegenerateElementError(ValueError):
    """An element length fell below the representable minimum."""


@dataclass
class ProblemCoefficients:
    """Data of the boundary value problem -mu*u'' + beta*u' + sigma*u = f.

    mu and sigma are constants; beta and f are expressions of x.  f' and
    beta' are derived symbolically on construction (the residual and the
    reduced-problem second derivative need them).
    """

    mu: float
    sigma: float
    beta: Expression
    f: Expression
    domain: tuple[float, float] = (0.0, 1.0)
    f_prime: Expression = field(init=False, repr=False)
    beta_prime: Expression = field(init=False, repr=False)

    def __post_init__(self):
        if not self.mu > 0.0:
            raise ValueError("diffusion coefficient mu must be positive")
        if self.sigma < 0.0:
            raise ValueError("reaction coefficient sigma must be nonnegative")
        a, b = self.domain
        if not a < b:
            raise ValueError("domain requires a < b")
        self.domain = (float(a), float(b))
        self.f_prime = differentiate(self.f)
        self.beta_prime = differentiate(self.beta)
        samples = self.beta_samples()
        if samples.min() < 0.0 < samples.max():
            raise ValueError("advection velocity beta changes sign on the domain")

    @classmethod
    def from_text(cls, mu, sigma, beta, f, domain=(0.0, 1.0)) -> "ProblemCoefficients":
        return cls(float(mu), float(sigma), parse_expr(beta), parse_expr(f), tuple(domain))

    def beta_samples(self) -> np.ndarray:
        a, b = self.domain
        return eval_expr(self.beta, np.linspace(a, b, _BETA_SAMPLES + 1))

    def beta_max(self) -> float:
        return float(np.max(np.abs(self.beta_samples())))


def peclet(c: ProblemCoefficients) -> float:
    """Peclet number ||beta||_inf * diam(domain) / mu (sampled sup norm)."""
    a, b = c.domain
    return c.beta_max() * (b - a) / c.mu


@dataclass(frozen=True)
class FemField:
    """Piecewise-linear function: mesh plus one nodal value per node.

    Fields produced by the solvers carry homogeneous Dirichlet values
    (zero at both ends); use :meth:`from_interior` for that guarantee.
    Analysis helpers may build fields with arbitrary nodal values.
    """

    mesh: Mesh1D
    values: np.ndarray

    def __post_init__(self):
        values = np.ascontiguousarray(np.asarray(self.values, dtype=float))
        if values.shape != self.mesh.nodes.shape:
            raise ValueError("need exactly one nodal value per mesh node")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @classmethod
    def from_interior(cls, mesh: Mesh1D, interior: np.ndarray) -> "FemField":
        interior = np.asarray(interior, dtype=float)
        if interior.shape != (mesh.dof,):
            raise ValueError("interior value count must match interior node count")
        return cls(mesh, np.concatenate([[0.0], interior, [0.0]]))

    @property
    def interior_values(self) -> np.ndarray:
        return self.values[1:-1]

    @property
    def slopes(self) -> np.ndarray:
        return np.diff(self.values) / self.mesh.lengths


def evaluate_field(u: FemField, x):
    """Value and elementwise slope of a piecewise-linear field at ``x``.

    At interior nodes the slope of the right element is reported; at the
    right domain end, the slope of the last element.
    """
    nodes = u.mesh.nodes
    scalar = np.ndim(x) == 0
    xv = np.asarray(x, dtype=float)
    if np.any(xv < nodes[0]) or np.any(xv > nodes[-1]):
        raise ValueError("evaluation point outside the mesh domain")
    idx = np.clip(np.searchsorted(nodes, xv, side="right") - 1, 0, u.mesh.element_count - 1)
    slopes = u.slopes
    slope = slopes[idx]
    value = u.values[idx] + (xv - nodes[idx]) * slope
    if scalar:
        return float(value), float(slope)
    return value, slope


@dataclass
class TridiagonalSystem:
    """Tridiagonal matrix and right-hand side over the interior nodes."""

    sub: np.ndarray
    diag: np.ndarray
    sup: np.ndarray
    rhs: np.ndarray

    def __post_init__(self):
        self.sub = np.asarray(self.sub, dtype=float)
        self.diag = np.asarray(self.diag, dtype=float)
        self.sup = np.asarray(self.sup, dtype=float)
        self.rhs = np.asarray(self.rhs, dtype=float)
        m = self.diag.size
        if self.rhs.size != m or self.sub.size != max(m - 1, 0) or self.sup.size != max(m - 1, 0):
            raise ValueError("inconsistent tridiagonal band lengths")

    @property
    def size(self) -> int:
        return self.diag.size

    def dense(self) -> np.ndarray:
        a = np.diag(self.diag)
        if self.size > 1:
            a += np.diag(self.sub, -1) + np.diag(self.sup, 1)
        return a

    def residual_inf(self, x: np.ndarray) -> float:
        return float(np.max(np.abs(self.dense() @ np.asarray(x, float) - self.rhs)))


def element_quadrature(mesh: Mesh1D, rule) -> tuple[np.ndarray, np.ndarray]:
    """Gauss points (n_elements, n_q) and combined weights w*h/2."""
    xi, w = rule
    xl = mesh.nodes[:-1][:, None]
    h = mesh.lengths[:, None]
    pts = xl + 0.5 * h * (xi[None, :] + 1.0)
    return pts, 0.5 * h * w[None, :]


def assemble_regularized(mesh: Mesh1D, c: ProblemCoefficients, lam: float, u0=None) -> TridiagonalSystem:
    """Assemble the regularized Galerkin system at penalty weight ``lam``.

    ``u0`` is the reduced solution feeding the lam*(u0, v)_V right-hand
    side; it is ignored (and may be None) when lam == 0.
    """
    if lam < 0.0:
        raise ValueError("regularization parameter must be nonnegative")
    if lam > 0.0 and u0 is None:
        raise ValueError("a reduced solution is required when lam > 0")
    n = mesh.element_count
    if mesh.dof < 1:
        raise ValueError("mesh has no interior nodes to solve for")
    h = mesh.lengths
    if np.any(h < _MIN_ELEMENT_LENGTH):
        raise DegenerateElementError("element length below representable minimum")

    # Constant-coefficient terms: closed-form element stiffness and mass.
    stiff = (c.mu + lam) / h
    mass = (c.sigma + lam) * h / 6.0
    ll = stiff + 2.0 * mass
    rr = stiff + 2.0 * mass
    lr = -stiff + mass
    rl = -stiff + mass

    # Advection int(beta * phi_trial' * phi_test): 5-point Gauss per element.
    pts, wts = element_quadrature(mesh, GAUSS_5)
    beta_q = eval_expr(c.beta, pts)
    xl = mesh.nodes[:-1][:, None]
    phi_r = (pts - xl) / h[:, None]
    phi_l = 1.0 - phi_r
    dphi = 1.0 / h[:, None]
    ll = ll + np.sum(wts * beta_q * (-dphi) * phi_l, axis=1)
    lr = lr + np.sum(wts * beta_q * dphi * phi_l, axis=1)
    rl = rl + np.sum(wts * beta_q * (-dphi) * phi_r, axis=1)
    rr = rr + np.sum(wts * beta_q * dphi * phi_r, axis=1)

    # Load vector: int(f*phi) plus, for lam > 0, lam*int(u0*phi + u0'*phi').
    f_q = eval_expr(c.f, pts)
    load_l = np.sum(wts * f_q * phi_l, axis=1)
    load_r = np.sum(wts * f_q * phi_r, axis=1)
    if lam > 0.0:
        u0_q, d1_q, _ = u0.evaluate(pts)
        load_l = load_l + lam * np.sum(wts * (u0_q * phi_l + d1_q * (-dphi)), axis=1)
        load_r = load_r + lam * np.sum(wts * (u0_q * phi_r + d1_q * dphi), axis=1)

    diag = ll[1:] + rr[:-1]
    sup = lr[1:-1] if n > 2 else np.empty(0)
    sub = rl[1:-1] if n > 2 else np.empty(0)
    rhs = load_l[1:] + load_r[:-1]
    return TridiagonalSystem(sub=sub, diag=diag, sup=sup, rhs=rhs)


def _values_and_slopes(obj, pts):
    if isinstance(obj, FemField):
        return evaluate_field(obj, pts)
    if callable(obj):
        return obj(pts)
    raise TypeError("expected a FemField or a callable returning (values, slopes)")


def sobolev_inner_product(u, v, element: int | None = None) -> float:
    """H1 inner product int(uv + u'v') over one element or the whole mesh.

    ``u`` and ``v`` are FemFields on the same mesh, or callables mapping
    sample points to (values, slopes); at least one must be a FemField.
    5-point Gauss per element.
    """
    fields = [o for o in (u, v) if isinstance(o, FemField)]
    if not fields:
        raise TypeError("at least one argument must be a FemField")
    mesh = fields[0].mesh
    if len(fields) == 2 and fields[1].mesh.nodes.shape != mesh.nodes.shape:
        raise ValueError("fields live on different meshes")
    pts, wts = element_quadrature(mesh, GAUSS_5)
    if element is not None:
        pts, wts = pts[element : element + 1], wts[element : element + 1]
    uv, us = _values_and_slopes(u, pts)
    vv, vs = _values_and_slopes(v, pts)
    return float(np.sum(wts * (uv * vv + us * vs)))
