import time

import pytest

from hlfem import AdaptConfig, SolveBackend, run_h_adaptive_baseline, run_hlambda_adaptive
from hlfem.assembly import ProblemCoefficients


@pytest.fixture(scope="session")
def benchmark_problem():
    """Singularly perturbed benchmark: huge advection, oscillatory source."""
    return ProblemCoefficients.from_text(1.0, 100.0, "10^4", "10^4*cos(4.5*pi*x)")


@pytest.fixture(scope="session")
def mild_problem():
    """Small Peclet number (= 10); no boundary-layer pathology."""
    return ProblemCoefficients.from_text(1.0, 1.0, "10", "1")


@pytest.fixture(scope="session")
def benchmark_run(benchmark_problem):
    """Adaptive stabilized run on the benchmark with default settings."""
    backend = SolveBackend(kind="exact", seed=1)
    started = time.perf_counter()
    result = run_hlambda_adaptive(benchmark_problem, AdaptConfig(N=15, tol_percent=0.2), backend)
    elapsed = time.perf_counter() - started
    return result, backend, elapsed


@pytest.fixture(scope="session")
def baseline_run(benchmark_problem):
    """Classical h-adaptive comparison run on the benchmark."""
    return run_h_adaptive_baseline(benchmark_problem, AdaptConfig(N=15, tol_percent=0.2))
