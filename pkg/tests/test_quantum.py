import numpy as np
import pytest

from hlfem.assembly import ProblemCoefficients, assemble_regularized
from hlfem.cauchy import solve_reduced
from hlfem.mesh import uniform_mesh
from hlfem.quantum import (
    HhlConfig,
    PhaseRangeError,
    PostselectionError,
    QuantumState,
    amplitude_encode,
    hhl_statevector_solve,
    quantum_H_evaluation,
    swap_test_estimate,
)
from hlfem.solver import thomas_solve
from hlfem.stabilize import build_loss_weights, loss_H
from hlfem.assembly import FemField


def fidelity(state: QuantumState, target) -> float:
    t = np.asarray(target, dtype=complex)
    t = t / np.linalg.norm(t)
    amps = state.amplitudes[: t.size]
    return float(np.abs(np.vdot(amps, t)) ** 2)


def test_amplitude_encode_examples():
    s = amplitude_encode([3.0, 4.0])
    assert s.amplitudes == pytest.approx([0.6, 0.8])
    s = amplitude_encode([1.0, 1.0, 1.0])
    assert s.dim == 4
    assert s.amplitudes == pytest.approx([1, 1, 1, 0] / np.sqrt(3))
    a = amplitude_encode([0.2, -0.7, 0.1])
    b = amplitude_encode([1.0, -3.5, 0.5])  # same direction, scaled by 5
    assert a.amplitudes == pytest.approx(b.amplitudes)


def test_amplitude_encode_rejects_zero():
    with pytest.raises(ValueError):
        amplitude_encode([0.0, 0.0])


def test_quantum_state_validation():
    with pytest.raises(ValueError):
        QuantumState(np.array([1.0, 1.0]), num_qubits=1)  # unnormalized
    with pytest.raises(ValueError):
        QuantumState(np.array([1.0, 0.0, 0.0]), num_qubits=1)  # wrong length


def test_swap_test_exact_values():
    a = amplitude_encode([1.0, 0.0])
    assert swap_test_estimate(a, a) == pytest.approx(1.0)
    b = amplitude_encode([0.0, 1.0])
    assert swap_test_estimate(a, b) == pytest.approx(0.0)
    c = amplitude_encode([1.0, 1.0])
    assert swap_test_estimate(a, c) == pytest.approx(0.5, rel=1e-12)


def test_swap_test_global_phase_invariance():
    rng = np.random.default_rng(4)
    v = rng.normal(size=4)
    a = amplitude_encode(v)
    rotated = QuantumState(a.amplitudes * np.exp(1j * 0.73), a.num_qubits)
    b = amplitude_encode(rng.normal(size=4))
    assert swap_test_estimate(rotated, b) == pytest.approx(swap_test_estimate(a, b), rel=1e-12)


def test_swap_test_dimension_mismatch():
    with pytest.raises(ValueError):
        swap_test_estimate(amplitude_encode([1.0, 0.0]), amplitude_encode([1.0, 0.0, 0.0]))


def test_swap_test_shots_reproducible_and_unbiased():
    a = amplitude_encode([1.0, 0.0])
    b = amplitude_encode([1.0, 1.0])
    r1 = swap_test_estimate(a, b, shots=5000, rng=np.random.default_rng(9))
    r2 = swap_test_estimate(a, b, shots=5000, rng=np.random.default_rng(9))
    assert r1 == r2
    rng = np.random.default_rng(1)
    mean = np.mean([swap_test_estimate(a, b, shots=10_000, rng=rng) for _ in range(200)])
    assert mean == pytest.approx(0.5, abs=0.01)


def test_shot_noise_scales_as_inverse_sqrt_shots():
    a = amplitude_encode([1.0, 0.0])
    b = amplitude_encode([1.0, 1.0])
    rng = np.random.default_rng(0)
    stds = []
    for shots in (10**3, 10**4, 10**5):
        estimates = [swap_test_estimate(a, b, shots=shots, rng=rng) for _ in range(300)]
        stds.append(float(np.std(estimates)))
    ideal = np.sqrt(10.0)
    for coarse, fine in zip(stds, stds[1:]):
        assert ideal / 1.5 <= coarse / fine <= ideal * 1.5


def test_hhl_identity_matrix_returns_encoded_rhs():
    state = hhl_statevector_solve(np.eye(2), [3.0, 4.0], HhlConfig(clock_qubits=3, seed=1))
    assert fidelity(state, [0.6, 0.8]) >= 1.0 - 1e-9


def test_hhl_exact_phase_diagonal_case():
    # eigenvalues {±1, ±2} at t = pi/4 give phases k/8: exact with 3 clock qubits
    cfg = HhlConfig(clock_qubits=3, evolution_time=np.pi / 4.0, seed=1)
    state = hhl_statevector_solve(np.diag([1.0, 2.0]), np.array([1.0, 1.0]) / np.sqrt(2.0), cfg)
    assert fidelity(state, [1.0, 0.5]) >= 0.99


def test_hhl_symmetric_fem_matrix():
    c = ProblemCoefficients.from_text(1.0, 100.0, "0", "1")
    system = assemble_regularized(uniform_mesh(5), c, 0.0)
    assert system.size == 4
    assert np.allclose(system.dense(), system.dense().T)
    state = hhl_statevector_solve(system.dense(), system.rhs, HhlConfig(clock_qubits=6, seed=1))
    assert fidelity(state, thomas_solve(system)) >= 0.95


def test_hhl_nonsymmetric_advection_matrix():
    c = ProblemCoefficients.from_text(1.0, 1.0, "10", "1")
    system = assemble_regularized(uniform_mesh(5), c, 0.0)
    state = hhl_statevector_solve(system.dense(), system.rhs, HhlConfig(clock_qubits=8, seed=1))
    assert fidelity(state, thomas_solve(system)) >= 0.95


def test_dilation_spectrum_is_sign_symmetric():
    rng = np.random.default_rng(3)
    a = rng.normal(size=(4, 4))
    dil = np.block([[np.zeros((4, 4)), a], [a.T, np.zeros((4, 4))]])
    evals = np.sort(np.linalg.eigvalsh(dil))
    assert evals == pytest.approx(-evals[::-1], rel=1e-12, abs=1e-12)


def test_hhl_input_validation():
    cfg = HhlConfig()
    with pytest.raises(ValueError):
        hhl_statevector_solve(np.zeros((2, 3)), [1.0, 0.0], cfg)
    with pytest.raises(ValueError):
        hhl_statevector_solve(np.eye(9), np.ones(9), cfg)
    with pytest.raises(ValueError):
        hhl_statevector_solve(np.eye(2), [0.0, 0.0], cfg)
    with pytest.raises(ValueError):
        hhl_statevector_solve(np.zeros((2, 2)), [1.0, 0.0], cfg)


def test_hhl_phase_range_guard():
    with pytest.raises(PhaseRangeError):
        hhl_statevector_solve(np.diag([1.0, 2.0]), [1.0, 1.0], HhlConfig(clock_qubits=3, evolution_time=10.0))


def test_hhl_postselection_retry_cap():
    class NeverLucky:
        def random(self):
            return 1.0

    cfg = HhlConfig(clock_qubits=3, retry_cap=5, seed=0)
    with pytest.raises(PostselectionError):
        hhl_statevector_solve(np.eye(2), [1.0, 0.0], cfg, rng=NeverLucky())


def test_returned_states_are_normalized():
    rng = np.random.default_rng(12)
    for _ in range(5):
        a = rng.normal(size=(3, 3)) + 3.0 * np.eye(3)
        state = hhl_statevector_solve(a, rng.normal(size=3), HhlConfig(clock_qubits=6, seed=2))
        assert np.sum(np.abs(state.amplitudes) ** 2) == pytest.approx(1.0, abs=1e-10)


def _loss_setup():
    c = ProblemCoefficients.from_text(1.0, 100.0, "10", "10^4*cos(4.5*pi*x)")
    mesh = uniform_mesh(8)
    u0 = solve_reduced(c, 4096)
    system = assemble_regularized(mesh, c, 1.0, u0)
    weights = build_loss_weights(mesh, mesh.nodes[-2], "right")
    return system, weights


def test_H_exact_mode_matches_classical_loss():
    system, weights = _loss_setup()
    h_quantum = quantum_H_evaluation(system, weights, HhlConfig(), mode="exact")
    field = FemField.from_interior(uniform_mesh(8), thomas_solve(system))
    h_classical = loss_H(field, uniform_mesh(8).nodes[-2], "right")
    assert abs(h_quantum - h_classical) <= 1e-10


def test_H_shots_mode_concentrates_on_classical_value():
    system, weights = _loss_setup()
    exact = quantum_H_evaluation(system, weights, HhlConfig(), mode="exact")
    rng = np.random.default_rng(5)
    estimates = [
        quantum_H_evaluation(system, weights, HhlConfig(shots=10**6, seed=5), mode="shots", rng=rng)
        for _ in range(50)
    ]
    assert np.mean(estimates) == pytest.approx(exact, rel=0.02)


def test_H_hhl_mode_within_ten_percent():
    system, weights = _loss_setup()
    exact = quantum_H_evaluation(system, weights, HhlConfig(), mode="exact")
    approx = quantum_H_evaluation(system, weights, HhlConfig(clock_qubits=6, shots=None, seed=2), mode="hhl")
    assert abs(approx - exact) <= 0.10 * exact


def test_H_mode_validation():
    system, weights = _loss_setup()
    with pytest.raises(ValueError):
        quantum_H_evaluation(system, weights, HhlConfig(), mode="warp")
