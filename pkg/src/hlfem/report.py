"""Report files: delimited convergence/solution/loss data plus rendered
figures saved next to them.

Floats are written with Python's shortest round-trip representation, so any
emitted CSV re-parses to the exact in-memory values.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .adaptive import AdaptIteration
from .assembly import FemField, evaluate_field

__all__ = [
    "write_convergence_csv",
    "write_solution_samples",
    "write_loss_scan_csv",
    "write_summary_json",
    "render_approximations_figure",
    "render_solution_figure",
    "render_loss_scan_figure",
]

CONVERGENCE_HEADER = "iteration,dof,accumulated_dof,error_percent,order,quantum_calls"


def _fmt(value) -> str:
    return str(float(value))


def write_convergence_csv(history: list[AdaptIteration], path) -> Path:
    """One row per iteration; ``order`` is empty on the first row and
    ``quantum_calls`` is empty for baseline runs."""
    if not history:
        raise ValueError("cannot write an empty convergence history")
    lines = [CONVERGENCE_HEADER]
    for it in history:
        order = "" if it.order is None else _fmt(it.order)
        calls = "" if it.quantum_calls is None else str(int(it.quantum_calls))
        lines.append(
            f"{it.index},{it.dof},{it.accumulated_dof},{_fmt(it.error_percent)},{order},{calls}"
        )
    path = Path(path)
    path.write_text("\n".join(lines) + "\n")
    return path


def _sample_points(field: FemField) -> np.ndarray:
    nodes = field.mesh.nodes
    inner = np.linspace(nodes[:-1], nodes[1:], 12, axis=1)[:, 1:-1]
    return np.sort(np.concatenate([nodes, inner.ravel()]))


def write_solution_samples(field: FemField, reference: FemField | None, path) -> Path:
    """Sample the field at all nodes plus 10 interior points per element.

    The ``u_ref`` column is present only when a reference field is given.
    """
    xs = _sample_points(field)
    u, _ = evaluate_field(field, xs)
    if reference is not None:
        ur, _ = evaluate_field(reference, xs)
        lines = ["x,u,u_ref"]
        lines += [f"{_fmt(x)},{_fmt(v)},{_fmt(r)}" for x, v, r in zip(xs, u, ur)]
    else:
        lines = ["x,u"]
        lines += [f"{_fmt(x)},{_fmt(v)}" for x, v in zip(xs, u)]
    path = Path(path)
    path.write_text("\n".join(lines) + "\n")
    return path


def write_loss_scan_csv(lambdas: np.ndarray, losses: np.ndarray, path) -> Path:
    lines = ["lambda,H"]
    lines += [f"{_fmt(lam)},{_fmt(h)}" for lam, h in zip(lambdas, losses)]
    path = Path(path)
    path.write_text("\n".join(lines) + "\n")
    return path


def write_summary_json(payload: dict, path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return path


def _plt():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def _panel(ax, field: FemField, reference: FemField | None, title: str) -> None:
    xs = _sample_points(field)
    u, _ = evaluate_field(field, xs)
    if reference is not None:
        xr = _sample_points(reference)
        ur, _ = evaluate_field(reference, xr)
        ax.plot(xr, ur, "k--", linewidth=0.8, label="reference")
    ax.plot(xs, u, "-", color="tab:blue", linewidth=1.0, label="approximation")
    nodes = field.mesh.nodes
    ax.plot(nodes, np.full_like(nodes, ax.get_ylim()[0]), "|", color="tab:gray", markersize=4)
    ax.set_title(title, fontsize=9)
    ax.set_xlabel("x", fontsize=8)
    ax.tick_params(labelsize=7)


def render_approximations_figure(
    fields: list[FemField], history: list[AdaptIteration], reference: FemField | None, path
) -> Path:
    """Grid of per-iteration approximations with the dashed reference."""
    plt = _plt()
    n = len(fields)
    ncols = min(3, n)
    nrows = (n + ncols - 1) // ncols
    fig, axes = plt.subplots(nrows, ncols, figsize=(4.0 * ncols, 2.8 * nrows), squeeze=False)
    for ax in axes.ravel()[n:]:
        ax.set_visible(False)
    for ax, field, it in zip(axes.ravel(), fields, history):
        _panel(ax, field, reference, f"iteration {it.index}: dof={it.dof}, error={it.error_percent:.2f}%")
    axes[0, 0].legend(fontsize=7)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def render_solution_figure(field: FemField, reference: FemField | None, path) -> Path:
    plt = _plt()
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    _panel(ax, field, reference, f"solution (dof={field.mesh.dof})")
    ax.legend(fontsize=8)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def render_loss_scan_figure(lambdas: np.ndarray, losses: np.ndarray, path) -> Path:
    plt = _plt()
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.plot(lambdas, losses, "-", color="tab:blue", linewidth=1.0)
    k = int(np.argmin(losses))
    ax.plot(lambdas[k], losses[k], "o", color="tab:red", markersize=4)
    ax.set_xlabel("lambda")
    ax.set_ylabel("H(lambda)")
    ax.set_yscale("log")
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
