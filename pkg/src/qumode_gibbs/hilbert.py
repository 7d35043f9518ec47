"""Hybrid qubit/qumode Hilbert-space kernel.

Amplitudes of a hybrid register are stored qubit-major: the flat index of
basis state ``|b_0 b_1 ... b_{n-1}> (x) |m>`` is ``b * cutoff + m`` where
``b`` is the big-endian integer of the qubit bits (qubit 0 is the most
significant bit). The system qubits are ``0..N-1`` and the ancilla copies
``N..2N-1``, so every reduction over the ancilla is a contiguous reshape.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import CapacityError, DomainError, ShapeError, ValidationError

#: Largest number of complex amplitudes a single register may hold.
MAX_AMPLITUDES = 1 << 26

SQRT_HALF = 1.0 / np.sqrt(2.0)

I2 = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
HADAMARD = SQRT_HALF * np.array([[1, 1], [1, -1]], dtype=complex)
PHASE_S = np.array([[1, 0], [0, 1j]], dtype=complex)
PHASE_SDG = PHASE_S.conj().T
CNOT = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
)

PAULI_MATRICES = {"I": I2, "X": PAULI_X, "Y": PAULI_Y, "Z": PAULI_Z}


@dataclass(frozen=True)
class QubitRegister:
    n_qubits: int

    def __post_init__(self):
        if self.n_qubits < 1:
            raise DomainError("a register needs at least one qubit")

    @property
    def dimension(self) -> int:
        return 1 << self.n_qubits


@dataclass(frozen=True)
class FockSpace:
    """Truncated single-mode Fock space spanned by ``|0>..|cutoff-1>``."""

    cutoff: int

    def __post_init__(self):
        if self.cutoff < 2:
            raise DomainError(f"Fock cutoff must be >= 2, got {self.cutoff}")

    def annihilation(self) -> np.ndarray:
        return np.diag(np.sqrt(np.arange(1, self.cutoff, dtype=float)), 1).astype(complex)

    def position(self) -> np.ndarray:
        a = self.annihilation()
        return (a + a.conj().T) * SQRT_HALF

    def momentum(self) -> np.ndarray:
        a = self.annihilation()
        return 1j * (a.conj().T - a) * SQRT_HALF


@dataclass(frozen=True, eq=False)
class HybridState:
    """State vector of ``n_qubits`` qubits tensored with one truncated qumode.

    ``cutoff == 1`` denotes a qubit-only register (the qumode has been
    projected out). ``normalized`` is False for post-selected intermediates.
    """

    amplitudes: np.ndarray
    n_qubits: int
    cutoff: int = 1
    normalized: bool = True

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        expected = (1 << self.n_qubits) * self.cutoff
        if amps.size != expected:
            raise ShapeError(
                f"expected {expected} amplitudes for {self.n_qubits} qubits x "
                f"cutoff {self.cutoff}, got {amps.size}"
            )
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def qubit_dimension(self) -> int:
        return 1 << self.n_qubits

    def matrix(self) -> np.ndarray:
        """Amplitudes as a ``(2**n_qubits, cutoff)`` array (read-only view)."""
        return self.amplitudes.reshape(self.qubit_dimension, self.cutoff)

    def norm_squared(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def renormalized(self) -> "HybridState":
        n2 = self.norm_squared()
        if n2 <= 0.0:
            raise ValidationError("cannot normalize the zero vector")
        return HybridState(self.amplitudes / np.sqrt(n2), self.n_qubits, self.cutoff, True)

    def with_amplitudes(self, amplitudes: np.ndarray, normalized: bool | None = None):
        return HybridState(
            amplitudes,
            self.n_qubits,
            self.cutoff,
            self.normalized if normalized is None else normalized,
        )

    @classmethod
    def from_qubits(cls, qubits: np.ndarray, normalized: bool = True) -> "HybridState":
        qubits = np.asarray(qubits, dtype=complex).reshape(-1)
        n = int(round(np.log2(qubits.size)))
        if 1 << n != qubits.size:
            raise ShapeError(f"length {qubits.size} is not a power of two")
        return cls(qubits, n, 1, normalized)

    @classmethod
    def product(cls, qubits: "HybridState", qumode: np.ndarray) -> "HybridState":
        """``|qubits> (x) |qumode>`` for a qubit-only state and Fock coefficients."""
        if qubits.cutoff != 1:
            raise ShapeError("left factor already carries a qumode")
        qumode = np.asarray(qumode, dtype=complex).reshape(-1)
        _check_capacity(qubits.qubit_dimension * qumode.size)
        amps = np.multiply.outer(qubits.amplitudes, qumode).reshape(-1)
        return cls(amps, qubits.n_qubits, qumode.size, qubits.normalized)


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    matrix: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ShapeError(f"density matrix must be square, got shape {m.shape}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_qubits(self) -> int:
        return int(round(np.log2(self.dimension)))

    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def normalized(self) -> "DensityMatrix":
        tr = self.trace()
        if tr <= 0.0:
            raise ValidationError("density matrix has non-positive trace")
        return DensityMatrix(self.matrix / tr, {**self.metadata, "pre_norm_trace": tr})

    def validate(self, herm_tol: float = 1e-12, trace_tol: float = 1e-10, eig_tol: float = 1e-10):
        m = self.matrix
        if np.max(np.abs(m - m.conj().T), initial=0.0) > herm_tol * max(1.0, np.abs(m).max()):
            raise ValidationError("density matrix is not Hermitian")
        if abs(self.trace() - 1.0) > trace_tol:
            raise ValidationError(f"trace {self.trace()} differs from 1")
        if np.linalg.eigvalsh(0.5 * (m + m.conj().T)).min() < -eig_tol:
            raise ValidationError("density matrix has negative eigenvalues")
        return self


def _check_capacity(n_amplitudes: int, budget: int = MAX_AMPLITUDES):
    if n_amplitudes > budget:
        raise CapacityError(
            f"{n_amplitudes} amplitudes exceed the register budget of {budget}"
        )


def bell_pairs(n: int, budget: int = MAX_AMPLITUDES) -> HybridState:
    """``prod_i (|0_i 0_{i+n}> + |1_i 1_{i+n}>)/sqrt(2)`` on ``2n`` qubits."""
    if n < 1:
        raise DomainError("need at least one Bell pair")
    dim = 1 << n
    _check_capacity(dim * dim, budget)
    amps = np.zeros(dim * dim, dtype=complex)
    # |k>|k> sits at flat index k*dim + k
    amps[:: dim + 1] = 1.0 / np.sqrt(dim)
    return HybridState(amps, 2 * n)


def partial_trace_ancilla(state) -> DensityMatrix:
    """Reduce a ``2N``-qubit pure state or density matrix onto qubits ``0..N-1``.

    The trace of the result equals the squared norm of the input; nothing is
    renormalized here.
    """
    if isinstance(state, HybridState):
        if state.cutoff != 1:
            raise ShapeError("project out the qumode before tracing the ancilla")
        vec = state.amplitudes
    elif isinstance(state, DensityMatrix):
        return _partial_trace_dm(state.matrix)
    else:
        arr = np.asarray(state, dtype=complex)
        if arr.ndim == 2 and arr.shape[0] == arr.shape[1] and arr.shape[0] > 1:
            return _partial_trace_dm(arr)
        vec = arr.reshape(-1)
    n_total = int(round(np.log2(vec.size)))
    if 1 << n_total != vec.size or n_total % 2:
        raise ShapeError(f"state of length {vec.size} is not a 2N-qubit vector")
    d = 1 << (n_total // 2)
    m = vec.reshape(d, d)
    return DensityMatrix(m @ m.conj().T)


def _partial_trace_dm(rho: np.ndarray) -> DensityMatrix:
    n_total = int(round(np.log2(rho.shape[0])))
    if 1 << n_total != rho.shape[0] or n_total % 2:
        raise ShapeError(f"matrix of size {rho.shape[0]} is not on 2N qubits")
    d = 1 << (n_total // 2)
    return DensityMatrix(np.einsum("iaja->ij", rho.reshape(d, d, d, d)))


def trace_distance(a: DensityMatrix | np.ndarray, b: DensityMatrix | np.ndarray, herm_tol: float = 1e-10) -> float:
    """Half the trace norm of ``a - b``."""
    ma = a.matrix if isinstance(a, DensityMatrix) else np.asarray(a, dtype=complex)
    mb = b.matrix if isinstance(b, DensityMatrix) else np.asarray(b, dtype=complex)
    if ma.shape != mb.shape:
        raise ShapeError(f"dimension mismatch {ma.shape} vs {mb.shape}")
    for m in (ma, mb):
        if np.abs(m - m.conj().T).max() > herm_tol:
            raise ValidationError("trace distance needs Hermitian operands")
    diff = ma - mb
    return 0.5 * float(np.abs(np.linalg.eigvalsh(0.5 * (diff + diff.conj().T))).sum())


def is_unitary(u: np.ndarray, tol: float = 1e-12) -> bool:
    return bool(np.abs(u.conj().T @ u - np.eye(u.shape[0])).max() <= tol)


def apply_qubit_gate(state: HybridState, gate: np.ndarray, targets, check: bool = True) -> HybridState:
    """Apply a 1- or 2-qubit unitary to ``targets`` and return the new state.

    For two-qubit gates the first target is the more significant index of
    ``gate`` (the control, for CNOT).
    """
    gate = np.asarray(gate, dtype=complex)
    targets = (targets,) if np.isscalar(targets) else tuple(int(t) for t in targets)
    k = len(targets)
    if k not in (1, 2) or gate.shape != (1 << k, 1 << k):
        raise ShapeError(f"gate of shape {gate.shape} does not act on {k} qubit(s)")
    if len(set(targets)) != k:
        raise ShapeError("gate targets must be distinct")
    for t in targets:
        if not 0 <= t < state.n_qubits:
            raise IndexError(f"target qubit {t} outside register of {state.n_qubits}")
    if check and not is_unitary(gate):
        raise ValidationError("gate is not unitary")
    psi = state.amplitudes.reshape((2,) * state.n_qubits + (state.cutoff,))
    g = gate.reshape((2,) * (2 * k))
    out = np.tensordot(g, psi, axes=(list(range(k, 2 * k)), list(targets)))
    out = np.moveaxis(out, list(range(k)), list(targets))
    return state.with_amplitudes(out.reshape(-1))


@lru_cache(maxsize=32)
def _z_signs(n_qubits: int) -> np.ndarray:
    """``(n_qubits, 2**n_qubits)`` table of Z eigenvalues per basis state."""
    idx = np.arange(1 << n_qubits)
    bits = (idx[None, :] >> (n_qubits - 1 - np.arange(n_qubits))[:, None]) & 1
    signs = 1.0 - 2.0 * bits
    signs.setflags(write=False)
    return signs


def pauli_string_matrix(n_qubits: int, ops: dict[int, str]) -> np.ndarray:
    """Dense Kronecker product with ``ops[site]`` on the listed sites."""
    out = np.ones((1, 1), dtype=complex)
    for q in range(n_qubits):
        out = np.kron(out, PAULI_MATRICES[ops.get(q, "I")])
    return out
