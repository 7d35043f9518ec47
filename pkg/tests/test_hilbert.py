from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from qumode_gibbs.errors import CapacityError, DomainError, ShapeError, ValidationError
from qumode_gibbs.hilbert import (
    CNOT,
    HADAMARD,
    PAULI_X,
    DensityMatrix,
    FockSpace,
    HybridState,
    QubitRegister,
    apply_qubit_gate,
    bell_pairs,
    is_unitary,
    partial_trace_ancilla,
    pauli_string_matrix,
    trace_distance,
)


def random_state(rng, dim):
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)


def test_bell_pair_single():
    amps = bell_pairs(1).amplitudes
    assert np.allclose(amps, [2**-0.5, 0, 0, 2**-0.5], atol=2e-16, rtol=0)


def test_bell_pairs_two_support():
    amps = bell_pairs(2).amplitudes
    for idx, a in enumerate(amps):
        sys_bits, anc_bits = idx >> 2, idx & 3
        assert a == (0.5 if sys_bits == anc_bits else 0.0)


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
def test_bell_pairs_reduce_to_identity(n):
    rho = partial_trace_ancilla(bell_pairs(n)).matrix
    assert np.max(np.abs(rho - np.eye(1 << n) / (1 << n))) <= 1e-15


def test_bell_pairs_against_dense_partial_trace():
    psi = bell_pairs(3).amplitudes.reshape(8, 8)
    # dense reference: sum over ancilla basis vectors
    ref = sum(np.outer(psi[:, j], psi[:, j].conj()) for j in range(8))
    assert np.allclose(ref, np.eye(8) / 8, atol=1e-15)


def test_bell_pairs_budget():
    with pytest.raises(CapacityError):
        bell_pairs(14, budget=1 << 20)
    with pytest.raises(DomainError):
        bell_pairs(0)


def test_product_state_reduction():
    rng = np.random.default_rng(1)
    a, b = random_state(rng, 4), random_state(rng, 4)
    rho = partial_trace_ancilla(np.kron(a, b)).matrix
    assert np.allclose(rho, np.outer(a, a.conj()), atol=1e-14)


def test_thermofield_double_reduces_to_gibbs():
    X = PAULI_X
    H = X + np.eye(2)
    beta = 1.0
    half = expm(-0.5 * beta * H)
    tfd = np.kron(half, np.eye(2)) @ bell_pairs(1).amplitudes
    rho = partial_trace_ancilla(tfd).matrix
    rho = rho / np.trace(rho)
    exact = expm(-beta * H) / np.trace(expm(-beta * H))
    assert np.max(np.abs(rho - exact)) <= 1e-10


def test_trace_distance_examples():
    zero = np.diag([1.0, 0.0])
    one = np.diag([0.0, 1.0])
    assert trace_distance(zero, zero) == pytest.approx(0.0, abs=1e-15)
    assert trace_distance(zero, one) == pytest.approx(1.0)
    assert trace_distance(np.eye(2) / 2, zero) == pytest.approx(0.5)


def test_trace_distance_rejects_non_hermitian():
    with pytest.raises(ValidationError):
        trace_distance(np.array([[0, 1], [0, 0]]), np.eye(2))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_trace_distance_metric_properties(seed):
    rng = np.random.default_rng(seed)
    mats = []
    for _ in range(3):
        a = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        m = a @ a.conj().T
        mats.append(m / np.trace(m))
    d = trace_distance
    assert 0.0 <= d(mats[0], mats[1]) <= 1.0 + 1e-12
    assert d(mats[0], mats[1]) == pytest.approx(d(mats[1], mats[0]), abs=1e-12)
    assert d(mats[0], mats[2]) <= d(mats[0], mats[1]) + d(mats[1], mats[2]) + 1e-12


def test_gate_examples():
    zero = HybridState.from_qubits([1, 0])
    assert np.allclose(apply_qubit_gate(zero, PAULI_X, [0]).amplitudes, [0, 1])
    ten = HybridState.from_qubits([0, 0, 1, 0])
    assert np.allclose(apply_qubit_gate(ten, CNOT, [0, 1]).amplitudes, [0, 0, 0, 1])


def test_gate_acts_on_correct_qubit_with_qumode():
    rng = np.random.default_rng(3)
    amps = random_state(rng, 8 * 5)
    state = HybridState(amps, 3, 5)
    out = apply_qubit_gate(state, PAULI_X, [1])
    full = np.kron(np.kron(np.kron(np.eye(2), PAULI_X), np.eye(2)), np.eye(5))
    assert np.allclose(out.amplitudes, full @ amps, atol=1e-14)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31 - 1), st.integers(1, 4))
def test_hadamard_involution(seed, n):
    rng = np.random.default_rng(seed)
    state = HybridState.from_qubits(random_state(rng, 1 << n))
    q = int(rng.integers(n))
    twice = apply_qubit_gate(apply_qubit_gate(state, HADAMARD, [q]), HADAMARD, [q])
    assert np.max(np.abs(twice.amplitudes - state.amplitudes)) <= 1e-12


def test_gate_errors():
    state = HybridState.from_qubits([1, 0, 0, 0])
    with pytest.raises(IndexError):
        apply_qubit_gate(state, PAULI_X, [2])
    with pytest.raises(ValidationError):
        apply_qubit_gate(state, np.array([[1, 1], [0, 1]]), [0])


def test_state_is_immutable():
    state = HybridState.from_qubits([1, 0])
    with pytest.raises(ValueError):
        state.amplitudes[0] = 0.0


def test_shape_checks():
    with pytest.raises(ShapeError):
        HybridState(np.zeros(6), 1, 2)
    with pytest.raises(ShapeError):
        HybridState.from_qubits(np.ones(3))
    with pytest.raises(DomainError):
        FockSpace(1)
    with pytest.raises(DomainError):
        QubitRegister(0)


def test_fock_commutator():
    fs = FockSpace(30)
    q, p = fs.position(), fs.momentum()
    comm = q @ p - p @ q
    # [q, p] = i except in the last level of a truncated space
    assert np.allclose(comm[:-1, :-1], 1j * np.eye(29), atol=1e-12)


def test_density_matrix_validation():
    DensityMatrix(np.eye(2) / 2).validate()
    with pytest.raises(ValidationError):
        DensityMatrix(np.diag([1.5, -0.5])).validate()


def test_pauli_string_and_unitarity():
    m = pauli_string_matrix(3, {0: "Y", 2: "Z"})
    assert is_unitary(m)
    assert np.allclose(m @ m, np.eye(8))
