"""Batch front end: JSON config in, CSV/JSON reports and figures out.

Modes:

- ``hlambda``:   the adaptive stabilized run (convergence table, one
                 solution dump and figure panel per iteration).
- ``hbaseline``: the classical h-adaptive comparison run (parameter fixed
                 at zero, no quantum-call accounting).
- ``solve``:     a single solve at a fixed regularization weight.
- ``loss-scan``: sample the oscillation loss over [0, lambda_max].

Every mode writes ``summary.json`` (config echo plus final metrics) into
the output directory; runs with identical config and seed produce
byte-identical CSV files.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import report
from .adaptive import (
    AdaptConfig,
    AdaptivityError,
    run_h_adaptive_baseline,
    run_hlambda_adaptive,
)
from .assembly import FemField, ProblemCoefficients, assemble_regularized, peclet
from .cauchy import solve_reduced
from .expr import ExpressionError, parse_expr
from .mesh import uniform_mesh
from .solver import SolveBackend, thomas_solve
from .stabilize import build_loss_weights, lambda_max
from .quantum import quantum_H_evaluation

__all__ = ["RunConfig", "ConfigError", "load_config", "run", "main"]

MODES = ("hlambda", "hbaseline", "solve", "loss-scan")


class ConfigError(ValueError):
    """Invalid run configuration; the message names the offending key."""


@dataclass
class RunConfig:
    mode: str
    coefficients: ProblemCoefficients
    N: int = 15
    tol_percent: float = 0.2
    theta: float = 2.0 / 3.0
    lambda_tol: float = 1.0
    layer_side: str = "right"
    backend_kind: str = "exact"
    shots: int = 10_000
    clock_qubits: int = 6
    evolution_time: float | None = None
    seed: int = 0
    study_noise: bool = False
    reuse_lambda_max: bool = True
    reference_elements: int = 5000
    output_dir: Path = Path("out")
    fixed_lambda: float = 0.0
    scan_points: int = 200
    max_iterations: int = 25
    plots: bool = True
    raw: dict = field(default_factory=dict)

    def make_backend(self) -> SolveBackend:
        return SolveBackend(
            kind=self.backend_kind,
            shots=self.shots,
            clock_qubits=self.clock_qubits,
            evolution_time=self.evolution_time,
            seed=self.seed,
            study_noise=self.study_noise,
        )

    def adapt_config(self) -> AdaptConfig:
        return AdaptConfig(
            N=self.N,
            tol_percent=self.tol_percent,
            theta=self.theta,
            lambda_tol=self.lambda_tol,
            reuse_lambda_max=self.reuse_lambda_max,
            max_iterations=self.max_iterations,
            layer_side=self.layer_side,
        )


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise ConfigError(message)


def _coefficients_from_dict(raw: dict) -> ProblemCoefficients:
    for key in ("mu", "sigma", "beta", "f"):
        _require(key in raw, f"coefficients.{key}: missing")
    domain = raw.get("domain", [0.0, 1.0])
    _require(
        isinstance(domain, (list, tuple)) and len(domain) == 2,
        "coefficients.domain: expected [a, b]",
    )
    try:
        beta = parse_expr(str(raw["beta"]))
        f_expr = parse_expr(str(raw["f"]))
    except ExpressionError as exc:
        raise ConfigError(f"coefficients expression: {exc}") from exc
    try:
        return ProblemCoefficients(
            mu=float(raw["mu"]),
            sigma=float(raw["sigma"]),
            beta=beta,
            f=f_expr,
            domain=(float(domain[0]), float(domain[1])),
        )
    except ValueError as exc:
        raise ConfigError(f"coefficients: {exc}") from exc


def load_config(path, mode=None, out=None, seed=None) -> RunConfig:
    """Parse and validate a JSON run configuration.

    ``mode``, ``out`` and ``seed`` override the corresponding file entries
    (the command-line flags).
    """
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    _require(isinstance(raw, dict), "config: expected a JSON object")

    chosen_mode = mode if mode is not None else raw.get("mode")
    _require(chosen_mode in MODES, f"mode: expected one of {MODES}, got {chosen_mode!r}")
    _require("coefficients" in raw, "coefficients: missing")
    coefficients = _coefficients_from_dict(raw["coefficients"])

    backend_raw = raw.get("backend", {})
    _require(isinstance(backend_raw, dict), "backend: expected an object")
    kind = backend_raw.get("kind", "exact")
    _require(kind in ("exact", "shots", "hhl"), f"backend.kind: unknown kind {kind!r}")

    cfg = RunConfig(
        mode=chosen_mode,
        coefficients=coefficients,
        N=int(raw.get("N", 15)),
        tol_percent=float(raw.get("tol_percent", 0.2)),
        theta=float(raw.get("theta", 2.0 / 3.0)),
        lambda_tol=float(raw.get("lambda_tol", 1.0)),
        layer_side=str(raw.get("layer_side", "right")),
        backend_kind=kind,
        shots=int(backend_raw.get("shots", 10_000)),
        clock_qubits=int(backend_raw.get("clock_qubits", 6)),
        evolution_time=backend_raw.get("evolution_time"),
        seed=int(seed if seed is not None else backend_raw.get("seed", 0)),
        study_noise=bool(raw.get("study_noise", False)),
        reuse_lambda_max=bool(raw.get("reuse_lambda_max", True)),
        reference_elements=int(raw.get("reference_elements", 5000)),
        output_dir=Path(out if out is not None else raw.get("output_dir", "out")),
        fixed_lambda=float(raw.get("lambda", 0.0)),
        scan_points=int(raw.get("scan_points", 200)),
        max_iterations=int(raw.get("max_iterations", 25)),
        plots=bool(raw.get("plots", True)),
        raw=raw,
    )
    _validate(cfg)
    return cfg


def _validate(cfg: RunConfig) -> None:
    _require(cfg.N >= 2, "N: initial mesh needs at least 2 elements")
    _require(cfg.tol_percent > 0.0, "tol_percent: must be positive")
    _require(0.0 < cfg.theta <= 1.0, "theta: must lie in (0, 1]")
    _require(cfg.lambda_tol > 0.0, "lambda_tol: must be positive")
    _require(cfg.layer_side in ("left", "right"), "layer_side: must be 'left' or 'right'")
    _require(cfg.shots >= 1, "backend.shots: must be positive")
    _require(cfg.clock_qubits >= 1, "backend.clock_qubits: must be positive")
    _require(cfg.reference_elements >= 2, "reference_elements: must be at least 2")
    _require(cfg.scan_points >= 2, "scan_points: must be at least 2")
    _require(cfg.max_iterations >= 1, "max_iterations: must be positive")
    _require(cfg.fixed_lambda >= 0.0, "lambda: must be nonnegative")
    if cfg.mode in ("hlambda", "hbaseline"):
        _require(
            cfg.coefficients.sigma > 0.0,
            "coefficients.sigma: the error indicator requires sigma > 0",
        )
    needs_reduced = cfg.mode in ("hlambda", "loss-scan") or (
        cfg.mode == "solve" and cfg.fixed_lambda > 0.0
    )
    if needs_reduced:
        samples = cfg.coefficients.beta_samples()
        top = float(np.max(np.abs(samples)))
        _require(
            top > 0.0 and float(np.min(np.abs(samples))) > 1e-8 * top,
            "coefficients.beta: must be bounded away from zero for this mode",
        )
        expected = "right" if samples[0] > 0.0 else "left"
        _require(
            cfg.layer_side == expected,
            f"layer_side: beta's sign puts the boundary layer on the {expected}",
        )


def _reference_field(cfg: RunConfig) -> FemField:
    mesh = uniform_mesh(cfg.reference_elements, *cfg.coefficients.domain)
    system = assemble_regularized(mesh, cfg.coefficients, 0.0, None)
    return FemField.from_interior(mesh, thomas_solve(system))


def _iteration_dicts(history) -> list[dict]:
    return [
        {
            "iteration": it.index,
            "dof": it.dof,
            "accumulated_dof": it.accumulated_dof,
            "error_percent": it.error_percent,
            "lambda_star": it.lambda_star,
            "order": it.order,
            "quantum_calls": it.quantum_calls,
        }
        for it in history
    ]


def _run_adaptive(cfg: RunConfig, out: Path) -> dict:
    backend = cfg.make_backend()
    if cfg.mode == "hlambda":
        result = run_hlambda_adaptive(cfg.coefficients, cfg.adapt_config(), backend)
    else:
        result = run_h_adaptive_baseline(cfg.coefficients, cfg.adapt_config())
    reference = _reference_field(cfg)
    report.write_convergence_csv(result.iterations, out / "convergence.csv")
    for it, approx in zip(result.iterations, result.fields):
        report.write_solution_samples(approx, reference, out / f"solution_iter_{it.index}.csv")
    if cfg.plots:
        report.render_approximations_figure(
            result.fields, result.iterations, reference, out / "approximations.png"
        )
    last = result.iterations[-1]
    return {
        "iterations": _iteration_dicts(result.iterations),
        "final_error_percent": last.error_percent,
        "final_dof": last.dof,
        "accumulated_dof": last.accumulated_dof,
        "total_quantum_calls": backend.call_counter if cfg.mode == "hlambda" else None,
        "peclet": peclet(cfg.coefficients),
    }


def _run_solve(cfg: RunConfig, out: Path) -> dict:
    c = cfg.coefficients
    mesh = uniform_mesh(cfg.N, *c.domain)
    u0 = None
    if cfg.fixed_lambda > 0.0:
        u0 = solve_reduced(c, max(4096, 8 * mesh.element_count))
    system = assemble_regularized(mesh, c, cfg.fixed_lambda, u0)
    approx = FemField.from_interior(mesh, thomas_solve(system))
    reference = _reference_field(cfg)
    report.write_solution_samples(approx, reference, out / "solution_iter_1.csv")
    if cfg.plots:
        report.render_solution_figure(approx, reference, out / "solution.png")
    from .estimator import vnorm_error_vs_reference

    return {
        "lambda": cfg.fixed_lambda,
        "dof": mesh.dof,
        "vnorm_distance_to_reference": vnorm_error_vs_reference(approx, reference),
        "peclet": peclet(c),
    }


def _run_loss_scan(cfg: RunConfig, out: Path) -> dict:
    c = cfg.coefficients
    mesh = uniform_mesh(cfg.N, *c.domain)
    x_layer = float(mesh.nodes[-2] if cfg.layer_side == "right" else mesh.nodes[1])
    lam_top = lambda_max(c, cfg.N)
    u0 = solve_reduced(c, max(4096, 8 * mesh.element_count))
    weights = build_loss_weights(mesh, x_layer, cfg.layer_side)
    backend = cfg.make_backend()
    lambdas = np.linspace(0.0, lam_top, cfg.scan_points)
    losses = np.empty_like(lambdas)
    mode = cfg.backend_kind if cfg.study_noise and cfg.backend_kind != "exact" else "exact"
    for i, lam in enumerate(lambdas):
        system = assemble_regularized(mesh, c, float(lam), u0)
        losses[i] = quantum_H_evaluation(
            system, weights, backend.hhl_config(), mode=mode, rng=backend._rng
        )
    report.write_loss_scan_csv(lambdas, losses, out / "loss_scan.csv")
    if cfg.plots:
        report.render_loss_scan_figure(lambdas, losses, out / "loss_scan.png")
    k = int(np.argmin(losses))
    return {
        "lambda_max": lam_top,
        "points": cfg.scan_points,
        "argmin_lambda": float(lambdas[k]),
        "min_H": float(losses[k]),
        "peclet": peclet(c),
    }


def run(cfg: RunConfig) -> dict:
    """Execute one mode and write its report files; returns the summary."""
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    if cfg.mode in ("hlambda", "hbaseline"):
        results = _run_adaptive(cfg, out)
    elif cfg.mode == "solve":
        results = _run_solve(cfg, out)
    else:
        results = _run_loss_scan(cfg, out)
    summary = {
        "config": {**cfg.raw, "mode": cfg.mode, "output_dir": str(cfg.output_dir), "seed": cfg.seed},
        "results": results,
    }
    report.write_summary_json(summary, out / "summary.json")
    return summary


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="hlfem",
        description="Adaptive stabilized FEM for 1D advection-diffusion-reaction problems",
    )
    parser.add_argument("--config", required=True, help="path to the JSON run configuration")
    parser.add_argument("--mode", choices=MODES, help="override the configured mode")
    parser.add_argument("--out", help="override the configured output directory")
    parser.add_argument("--seed", type=int, help="override the configured PRNG seed")
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config, mode=args.mode, out=args.out, seed=args.seed)
        run(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except AdaptivityError as exc:
        print(f"run failed: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # propagate the reason, fail the exit status
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
