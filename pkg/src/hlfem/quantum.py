"""Desk-scale statevector emulation of the quantum loss-evaluation path.

The pipeline mirrors how the loss would be read off a quantum device: the
linear system's solution is prepared as an amplitude-encoded state (here by
an HHL simulation or directly from the classical solve), and a SWAP test
against the encoded loss-weight vector estimates |<w_hat|u_hat>|^2.  Since
the loss equals |w . u|/|u| = |w| * |<w_hat|u_hat>|, one overlap estimate
per probe suffices; the absolute value the SWAP test imposes is exactly the
absolute value in the loss definition, so no sign recovery is needed.

The HHL simulation works on explicit statevectors: Hermitian dilation
[[0, A], [A^T, 0]] (FEM matrices are nonsymmetric for beta != 0), quantum
phase estimation with a clock register, the controlled eigenvalue-inversion
rotation with C equal to the smallest representable eigenvalue magnitude,
inverse phase estimation, and postselection on the rotation ancilla.  The
state register is kept in the dilation's eigenbasis throughout, which turns
the controlled evolution into diagonal phase multiplications; clock
transforms are FFTs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .assembly import TridiagonalSystem
from .solver import thomas_solve

__all__ = [
    "QuantumState",
    "HhlConfig",
    "PhaseRangeError",
    "PostselectionError",
    "amplitude_encode",
    "swap_test_estimate",
    "hhl_statevector_solve",
    "quantum_H_evaluation",
]

_NORM_TOL = 1e-10


class PhaseRangeError(ValueError):
    """An eigenvalue maps outside the representable signed phase range."""


class PostselectionError(RuntimeError):
    """The rotation ancilla never measured 1 within the retry budget."""


@dataclass(frozen=True)
class QuantumState:
    """Normalized complex amplitudes over a power-of-two basis."""

    amplitudes: np.ndarray
    num_qubits: int

    def __post_init__(self):
        amps = np.ascontiguousarray(np.asarray(self.amplitudes, dtype=complex))
        if amps.ndim != 1 or amps.size != 1 << self.num_qubits:
            raise ValueError("amplitude count must equal 2**num_qubits")
        if abs(float(np.sum(np.abs(amps) ** 2)) - 1.0) > _NORM_TOL:
            raise ValueError("state is not normalized")
        amps.flags.writeable = False
        object.__setattr__(self, "amplitudes", amps)

    @property
    def dim(self) -> int:
        return self.amplitudes.size


def _next_power_of_two(n: int) -> int:
    return 1 << max(n - 1, 0).bit_length() if n > 1 else 1


def amplitude_encode(v) -> QuantumState:
    """Pad a vector with zeros to the next power of two and normalize."""
    v = np.asarray(v, dtype=complex)
    if v.ndim != 1 or v.size == 0:
        raise ValueError("expected a nonempty vector")
    norm = float(np.linalg.norm(v))
    if norm == 0.0:
        raise ValueError("cannot encode the zero vector")
    dim = _next_power_of_two(v.size)
    amps = np.zeros(dim, dtype=complex)
    amps[: v.size] = v / norm
    return QuantumState(amps, num_qubits=int(np.log2(dim)))


def swap_test_estimate(a: QuantumState, b: QuantumState, shots: int | None = None, rng=None) -> float:
    """Estimate the squared overlap |<a|b>|^2 by the SWAP test.

    With ``shots=None`` the exact value is returned.  Otherwise the ancilla
    measurement is sampled: P(0) = (1 + |<a|b>|^2)/2, and the estimate
    max(0, 2*p_hat - 1) is returned (clipped at zero since the true value
    is a squared magnitude).
    """
    if a.dim != b.dim:
        raise ValueError("states must have equal dimension")
    overlap_sq = float(np.abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2)
    if shots is None:
        return overlap_sq
    if shots < 1:
        raise ValueError("shot count must be positive")
    if rng is None:
        rng = np.random.default_rng()
    p_zero = 0.5 * (1.0 + overlap_sq)
    zeros = rng.binomial(int(shots), p_zero)
    return max(0.0, 2.0 * zeros / shots - 1.0)


@dataclass(frozen=True)
class HhlConfig:
    """Knobs of the HHL simulation.

    ``evolution_time=None`` auto-scales t so the spectral radius maps to a
    quarter turn of eigenphase, keeping the full (symmetric) dilation
    spectrum well inside the representable signed range.
    """

    clock_qubits: int = 6
    evolution_time: float | None = None
    retry_cap: int = 10_000
    shots: int | None = None
    seed: int = 0

    def __post_init__(self):
        if self.clock_qubits < 1:
            raise ValueError("need at least one clock qubit")
        if self.evolution_time is not None and not self.evolution_time > 0.0:
            raise ValueError("evolution time must be positive")
        if self.retry_cap < 1:
            raise ValueError("retry cap must be positive")


_MAX_SYSTEM_DIM = 8
_MAX_PADDED_DIM = 16


def hhl_statevector_solve(A, b, cfg: HhlConfig, rng=None) -> QuantumState:
    """Simulate HHL for Ax = b and return the normalized solution block.

    ``A`` may be nonsymmetric; it is embedded as [[0, A], [A^T, 0]] with
    right-hand side [b, 0], whose solution is [0, x].  The returned state
    encodes x (padded to a power of two).
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("matrix must be square")
    m = A.shape[0]
    if m > _MAX_SYSTEM_DIM:
        raise ValueError(f"system dimension {m} exceeds the HHL cap {_MAX_SYSTEM_DIM}")
    if b.shape != (m,):
        raise ValueError("right-hand side length must match the matrix")
    b_norm = float(np.linalg.norm(b))
    if b_norm == 0.0:
        raise ValueError("right-hand side must be nonzero")

    dilation = np.zeros((2 * m, 2 * m))
    dilation[:m, m:] = A
    dilation[m:, :m] = A.T
    dim = _next_power_of_two(2 * m)
    if dim > _MAX_PADDED_DIM:
        raise ValueError("padded dimension exceeds the statevector cap")
    padded = np.eye(dim)
    padded[: 2 * m, : 2 * m] = dilation

    evals, Q = np.linalg.eigh(padded)
    rho = float(np.max(np.abs(evals)))
    if rho == 0.0 or float(np.min(np.abs(evals))) < 1e-12 * rho:
        raise ValueError("matrix is singular to working precision")
    t = cfg.evolution_time if cfg.evolution_time is not None else 0.5 * np.pi / rho
    n_clock = 1 << cfg.clock_qubits
    phases = evals * t / (2.0 * np.pi)
    if np.any(phases < -0.5) or np.any(phases > (n_clock / 2 - 1) / n_clock):
        raise PhaseRangeError(
            "an eigenvalue maps outside the representable signed phase range; "
            "decrease evolution_time or add clock qubits"
        )

    rhs = np.zeros(dim)
    rhs[:m] = b / b_norm
    beta = Q.T @ rhs

    # Forward phase estimation, in the dilation eigenbasis: Hadamards put the
    # clock in a uniform superposition, controlled powers of exp(i*H*t)
    # multiply component (k, l) by exp(i*lambda_l*t*k), and the inverse QFT
    # is an FFT over the clock axis.
    k = np.arange(n_clock)
    psi = np.exp(1j * np.outer(k, evals * t)) * beta[None, :] / np.sqrt(n_clock)
    psi = np.fft.fft(psi, axis=0) / np.sqrt(n_clock)

    # Eigenvalue-inversion rotation: clock bin j encodes the signed integer
    # s(j), i.e. the eigenvalue 2*pi*s/(n_clock*t); with C chosen as the
    # smallest representable magnitude, the ancilla-1 amplitude is C/lambda
    # = 1/s.  Bin 0 has no rotation.
    s = np.where(k < n_clock // 2, k, k - n_clock).astype(float)
    with np.errstate(divide="ignore"):
        ratio = np.where(s == 0.0, 0.0, 1.0 / s)
    branch1 = ratio[:, None] * psi

    # Inverse phase estimation on the ancilla-1 branch, then project the
    # clock back onto |0>: QFT, conjugate phases, Hadamards.
    phi = np.fft.ifft(branch1, axis=0) * np.sqrt(n_clock)
    phi *= np.exp(-1j * np.outer(k, evals * t))
    good = phi.sum(axis=0) / np.sqrt(n_clock)

    success = float(np.sum(np.abs(good) ** 2))
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    for _ in range(cfg.retry_cap):
        if rng.random() < success:
            break
    else:
        raise PostselectionError(f"postselection success probability {success:.3g} never hit")

    state = Q @ (good / np.sqrt(success))
    block = state[m : 2 * m]
    block_norm = float(np.linalg.norm(block))
    if block_norm < 1e-12:
        raise PostselectionError("solution block carries no amplitude")
    return amplitude_encode(block)


def quantum_H_evaluation(system: TridiagonalSystem, weights, cfg: HhlConfig, mode: str = "exact", rng=None) -> float:
    """Oscillation loss of a system's solution through the quantum path.

    - ``exact``: classical solve and arithmetic, |w . u| / |u|.
    - ``shots``: classical solve, SWAP test with cfg.shots samples.
    - ``hhl``:  HHL-prepared solution state (dimension <= 8), then SWAP.

    The SWAP estimate is |<w_hat|u_hat>|, so the loss is |w| times it.
    """
    w = np.asarray(weights.w, dtype=float)
    if w.size != system.size:
        raise ValueError("weight vector length must match the system size")
    w_norm = float(np.linalg.norm(w))
    if mode == "exact":
        u = thomas_solve(system)
        u_norm = float(np.linalg.norm(u))
        if u_norm == 0.0:
            return 0.0
        return abs(float(w @ u)) / u_norm
    if w_norm == 0.0:
        return 0.0
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    if mode == "shots":
        u = thomas_solve(system)
        if float(np.linalg.norm(u)) == 0.0:
            return 0.0
        solution_state = amplitude_encode(u)
    elif mode == "hhl":
        solution_state = hhl_statevector_solve(system.dense(), system.rhs, cfg, rng=rng)
    else:
        raise ValueError(f"unknown evaluation mode {mode!r}")
    w_state = amplitude_encode(w)
    overlap_sq = swap_test_estimate(solution_state, w_state, shots=cfg.shots, rng=rng)
    return w_norm * float(np.sqrt(overlap_sq))
