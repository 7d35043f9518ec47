"""Joint qubit/qumode evolution ``exp(-i H p t)``.

Two routes are provided: an exact one that diagonalizes ``H`` and displaces
the qumode per eigencomponent, and a Trotterized circuit over
``{H, S, S^dag, CNOT, HybridX}`` where ``HybridX(theta, q) = exp(-i theta X_q p)``.
The identity part of ``H`` compiles to the qumode-only gate
``P(theta) = exp(-i theta p)``.

Circuits act on states whose Fock index is held in the eigenbasis of the
truncated ``p``, where every hybrid gate is diagonal in the qumode.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.linalg import expm

from .cv import (
    from_momentum_basis,
    momentum_eigensystem,
    momentum_eigenvalues,
    to_momentum_basis,
)
from .errors import DomainError, NumericalError, ShapeError, ValidationError
from .hilbert import (
    HADAMARD,
    PAULI_MATRICES,
    PHASE_S,
    PHASE_SDG,
    HybridState,
    pauli_string_matrix,
)

PauliString = tuple  # tuple of (site, "X"|"Y"|"Z") pairs sorted by site


def canonical_pauli(pauli) -> PauliString:
    """Normalize a ``{site: op}`` map, pair list or ``"X0 Z1"`` string."""
    if isinstance(pauli, str):
        items = []
        for tok in pauli.split():
            items.append((int(tok[1:]), tok[0].upper()))
    elif isinstance(pauli, dict):
        items = list(pauli.items())
    else:
        items = list(pauli)
    out = {}
    for site, op in items:
        op = op.upper()
        if op not in ("X", "Y", "Z", "I"):
            raise DomainError(f"unknown Pauli operator {op!r}")
        if int(site) < 0:
            raise DomainError(f"negative site {site}")
        if int(site) in out:
            raise DomainError(f"site {site} appears twice in one Pauli string")
        if op != "I":
            out[int(site)] = op
    return tuple(sorted(out.items()))


def pauli_label(pauli: PauliString) -> str:
    return " ".join(f"{op}{site}" for site, op in pauli) or "I"


@dataclass(frozen=True, eq=False)
class PauliHamiltonian:
    """``sum_j c_j P_j + shift * I`` on ``n_qubits`` qubits.

    Terms are merged and sorted by Pauli string on construction.
    """

    n_qubits: int
    terms: tuple = ()
    shift: float = 0.0

    def __post_init__(self):
        merged: dict = {}
        for coeff, pauli in self.terms:
            coeff = float(coeff)
            if not np.isfinite(coeff):
                raise ValidationError("Hamiltonian coefficients must be finite")
            key = canonical_pauli(pauli)
            if any(site >= self.n_qubits for site, _ in key):
                raise DomainError(f"term {pauli_label(key)} outside {self.n_qubits} qubits")
            merged[key] = merged.get(key, 0.0) + coeff
        shift = float(self.shift) + merged.pop((), 0.0)
        if not np.isfinite(shift):
            raise ValidationError("shift must be finite")
        terms = tuple((c, k) for k, c in sorted(merged.items(), key=lambda kv: _sort_key(kv[0])) if c != 0.0)
        object.__setattr__(self, "terms", terms)
        object.__setattr__(self, "shift", shift)

    def with_shift(self, shift: float) -> "PauliHamiltonian":
        return PauliHamiltonian(self.n_qubits, self.terms, shift)

    @property
    def dimension(self) -> int:
        return 1 << self.n_qubits

    @cached_property
    def dense(self) -> np.ndarray:
        m = self.shift * np.eye(self.dimension, dtype=complex)
        for coeff, pauli in self.terms:
            m = m + coeff * pauli_string_matrix(self.n_qubits, dict(pauli))
        m.setflags(write=False)
        return m

    @cached_property
    def eigensystem(self):
        """Eigenvalues (ascending) and eigenvectors of the dense matrix."""
        try:
            w, v = np.linalg.eigh(self.dense)
        except np.linalg.LinAlgError as exc:
            raise NumericalError(f"eigen-solver failed: {exc}") from exc
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(v))):
            raise NumericalError("eigen-solver returned non-finite values")
        w.setflags(write=False)
        v.setflags(write=False)
        return w, v

    def min_eigenvalue(self) -> float:
        return float(self.eigensystem[0][0])

    def tight_shifted(self) -> "PauliHamiltonian":
        """Copy whose smallest eigenvalue is exactly zero (up to rounding)."""
        return self.with_shift(self.shift - self.min_eigenvalue())

    def __str__(self) -> str:
        parts = [f"{c:+.12g}*{pauli_label(p)}" for c, p in self.terms]
        if self.shift:
            parts.append(f"{self.shift:+.12g}*I")
        return " ".join(parts) or "0"


def _sort_key(pauli: PauliString):
    return (len(pauli), tuple(site for site, _ in pauli), tuple(op for _, op in pauli))


_ONE_QUBIT = {"H": HADAMARD, "S": PHASE_S, "SDG": PHASE_SDG}
_ONE_QUBIT.update({k: v for k, v in PAULI_MATRICES.items() if k != "I"})


@dataclass(frozen=True)
class Gate:
    """One circuit element.

    ``name`` is a one-qubit gate (``H``, ``S``, ``SDG``, ``X``, ``Y``, ``Z``),
    ``CNOT`` with targets ``(control, target)``, ``HX`` (HybridX) with one
    target, or ``P`` (qumode-only phase) with no targets.
    """

    name: str
    targets: tuple = ()
    theta: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(int(t) for t in self.targets))
        arity = {"CNOT": 2, "HX": 1, "P": 0}.get(self.name, 1)
        if self.name not in _ONE_QUBIT and self.name not in ("CNOT", "HX", "P"):
            raise DomainError(f"unknown gate {self.name!r}")
        if len(self.targets) != arity:
            raise ShapeError(f"{self.name} takes {arity} target(s), got {self.targets}")
        if self.name in ("HX", "P"):
            if self.theta is None or not np.isfinite(self.theta):
                raise ValidationError(f"{self.name} needs a finite angle")

    def to_text(self) -> str:
        parts = [self.name]
        if self.theta is not None:
            parts.append(f"theta={self.theta!r}")
        parts.extend(str(t) for t in self.targets)
        return " ".join(parts)

    @classmethod
    def from_text(cls, line: str) -> "Gate":
        tokens = line.split()
        theta = None
        targets = []
        for tok in tokens[1:]:
            if tok.startswith("theta="):
                theta = float(tok[6:])
            else:
                targets.append(int(tok))
        return cls(tokens[0], tuple(targets), theta)


@dataclass(frozen=True)
class HybridCircuit:
    n_qubits: int
    gates: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        for g in self.gates:
            for t in g.targets:
                if not 0 <= t < self.n_qubits:
                    raise IndexError(f"gate {g.to_text()} outside {self.n_qubits} qubits")

    def __add__(self, other: "HybridCircuit") -> "HybridCircuit":
        return HybridCircuit(max(self.n_qubits, other.n_qubits), self.gates + other.gates)

    def count(self, name: str) -> int:
        return sum(g.name == name for g in self.gates)

    def to_text(self) -> str:
        return "\n".join(g.to_text() for g in self.gates)

    @classmethod
    def from_text(cls, text: str, n_qubits: int) -> "HybridCircuit":
        lines = [ln.strip() for ln in text.splitlines()]
        return cls(n_qubits, tuple(Gate.from_text(ln) for ln in lines if ln and not ln.startswith("#")))

    def apply_pbasis(self, psi: np.ndarray, p: np.ndarray) -> np.ndarray:
        """Apply the circuit to amplitudes shaped ``(2,)*n + (C,)`` in the ``p`` eigenbasis."""
        psi = np.array(psi, dtype=complex)
        n = psi.ndim - 1
        for g in self.gates:
            if g.name == "HX":
                psi = _hybrid_x_pbasis(psi, g.theta, g.targets[0], p)
            elif g.name == "P":
                psi = psi * np.exp(-1j * g.theta * p)
            elif g.name == "CNOT":
                c, t = g.targets
                idx = [slice(None)] * (n + 1)
                idx[c] = 1
                sub = psi[tuple(idx)]
                tt = t if t < c else t - 1
                psi[tuple(idx)] = np.flip(sub, axis=tt)
            else:
                m = _ONE_QUBIT[g.name]
                q = g.targets[0]
                psi = np.moveaxis(np.tensordot(m, psi, axes=([1], [q])), 0, q)
        return psi

    def apply(self, state: HybridState) -> HybridState:
        """Run the circuit on a hybrid state held in the Fock basis."""
        if state.cutoff < 2:
            raise ShapeError("circuits need a qumode register")
        if state.n_qubits < self.n_qubits:
            raise ShapeError("state has fewer qubits than the circuit")
        p = momentum_eigenvalues(state.cutoff)
        psi = to_momentum_basis(state.matrix()).reshape((2,) * state.n_qubits + (state.cutoff,))
        psi = self.apply_pbasis(psi, p)
        return state.with_amplitudes(from_momentum_basis(psi.reshape(-1, state.cutoff)))

    def dense(self, cutoff: int) -> np.ndarray:
        """Dense matrix on ``qubits (x) Fock`` (qubit-major), for equivalence checks."""
        dim = (1 << self.n_qubits) * cutoff
        p, vecs = momentum_eigensystem(cutoff)
        cols = np.eye(dim, dtype=complex).reshape((1 << self.n_qubits), cutoff, dim)
        # move the Fock index to the p basis, batch over the column index
        cols = np.einsum("bnd,nk->bkd", cols, vecs.conj())
        cols = np.moveaxis(cols.reshape((2,) * self.n_qubits + (cutoff, dim)), -1, 0)
        out = np.stack([self.apply_pbasis(c, p) for c in cols], axis=-1)
        out = out.reshape((1 << self.n_qubits), cutoff, dim)
        return np.einsum("bkd,nk->bnd", out, vecs).reshape(dim, dim)


def _hybrid_x_pbasis(psi: np.ndarray, theta: float, q: int, p: np.ndarray) -> np.ndarray:
    # exp(-i theta X p) = cos(theta p) - i sin(theta p) X
    cos = np.cos(theta * p)
    sin = np.sin(theta * p)
    a0 = np.take(psi, 0, axis=q)
    a1 = np.take(psi, 1, axis=q)
    return np.stack([cos * a0 - 1j * sin * a1, cos * a1 - 1j * sin * a0], axis=q)


def hybrid_x_gate(theta: float, cutoff: int) -> np.ndarray:
    """Dense ``exp(-i theta X (x) p)`` on ``qubit (x) Fock``.

    Built by rotating to the X eigenbasis with H and applying ``exp(-+ i theta p)``
    on the ``+`` and ``-`` branches.
    """
    if not np.isfinite(theta):
        raise ValidationError("theta must be finite")
    p, vecs = momentum_eigensystem(cutoff)
    plus = (vecs * np.exp(-1j * theta * p)) @ vecs.conj().T
    minus = (vecs * np.exp(1j * theta * p)) @ vecs.conj().T
    branch = np.zeros((2 * cutoff, 2 * cutoff), dtype=complex)
    branch[:cutoff, :cutoff] = plus
    branch[cutoff:, cutoff:] = minus
    h = np.kron(HADAMARD, np.eye(cutoff))
    return h @ branch @ h


def compile_pauli_p_evolution(term, theta: float, n_qubits: int | None = None) -> HybridCircuit:
    """Circuit for ``exp(-i theta c P (x) p)`` where ``term = (c, P)``.

    Every site is rotated to Z (X by H, Y by H S^dag), the Z parity is
    collected on the last site with a CNOT ladder, and H on that site turns
    the parity into the X of a single HybridX.
    """
    coeff, pauli = term
    pauli = canonical_pauli(pauli)
    if not pauli:
        raise DomainError("identity term has no qubit circuit; use the P gate")
    angle = float(coeff) * float(theta)
    sites = [s for s, _ in pauli]
    if n_qubits is None:
        n_qubits = sites[-1] + 1
    pre: list[Gate] = []
    ladder = [Gate("CNOT", (a, b)) for a, b in zip(sites[:-1], sites[1:])]
    target, top = pauli[-1]
    if len(pauli) == 1:
        # already a single-site rotation of X
        core = {
            "X": [Gate("HX", (target,), angle)],
            "Y": [Gate("SDG", (target,)), Gate("HX", (target,), angle), Gate("S", (target,))],
            "Z": [Gate("H", (target,)), Gate("HX", (target,), angle), Gate("H", (target,))],
        }[top]
    else:
        # the ladder maps Z_target to the full Z parity, so rotate every site to Z
        for site, op in pauli:
            if op == "X":
                pre.append(Gate("H", (site,)))
            elif op == "Y":
                pre.extend([Gate("SDG", (site,)), Gate("H", (site,))])
        core = [Gate("H", (target,)), Gate("HX", (target,), angle), Gate("H", (target,))]
    gates = pre + ladder + core + ladder[::-1] + [_inverse(g) for g in pre[::-1]]
    return HybridCircuit(n_qubits, tuple(gates))


def _inverse(g: Gate) -> Gate:
    swap = {"S": "SDG", "SDG": "S"}
    return Gate(swap.get(g.name, g.name), g.targets, None if g.theta is None else -g.theta)


def dense_p_evolution(term, theta: float, n_qubits: int, cutoff: int) -> np.ndarray:
    """``expm(-i theta c P (x) p)`` with the truncated ``p``; equivalence oracle."""
    coeff, pauli = term
    P = pauli_string_matrix(n_qubits, dict(canonical_pauli(pauli)))
    a = np.diag(np.sqrt(np.arange(1, cutoff)), 1)
    p = 1j * (a.T - a) / np.sqrt(2.0)
    return expm(-1j * theta * coeff * np.kron(P, p))


def circuit_deviation(term, theta: float, n_qubits: int, cutoff: int = 12) -> float:
    """Largest entrywise gap between the compiled circuit and the dense exponential."""
    circ = compile_pauli_p_evolution(term, theta, n_qubits)
    return float(np.abs(circ.dense(cutoff) - dense_p_evolution(term, theta, n_qubits, cutoff)).max())


def _split_state(H: PauliHamiltonian, state: HybridState):
    if state.cutoff < 2:
        raise ShapeError("joint evolution needs a qumode register")
    if state.n_qubits < H.n_qubits:
        raise ShapeError(f"state has {state.n_qubits} qubits, H needs {H.n_qubits}")
    rest = 1 << (state.n_qubits - H.n_qubits)
    return state.amplitudes.reshape(H.dimension, rest, state.cutoff)


def exact_joint_unitary(H: PauliHamiltonian, t: float, state: HybridState) -> HybridState:
    """Apply ``exp(-i H (x) p t)`` with ``H`` acting on the leading qubits of ``state``.

    ``H`` is diagonalized once; each eigencomponent's qumode factor is
    multiplied by ``exp(-i E_n t p)`` in the ``p`` eigenbasis.
    """
    if not np.isfinite(t):
        raise ValidationError("evolution time must be finite")
    energies, u = H.eigensystem
    p = momentum_eigenvalues(state.cutoff)
    psi = to_momentum_basis(_split_state(H, state))
    psi = np.einsum("mn,nrk->mrk", u.conj().T, psi)
    psi = psi * np.exp(-1j * t * energies[:, None, None] * p[None, None, :])
    psi = from_momentum_basis(np.einsum("mn,nrk->mrk", u, psi))
    return state.with_amplitudes(psi.reshape(-1))


def trotter_circuit(H: PauliHamiltonian, t: float, steps: int, order: int = 1) -> HybridCircuit:
    """Product-formula circuit for ``exp(-i H (x) p t)``.

    Order 1 applies the canonical term order once per slice; order 2 uses the
    symmetric slice ``A(dt/2) .. Z(dt/2) Z(dt/2) .. A(dt/2)`` with the middle
    pair merged. The identity part commutes with everything and is applied once.
    """
    if steps < 1:
        raise DomainError("steps must be >= 1")
    if order not in (1, 2):
        raise DomainError("order must be 1 or 2")
    dt = t / steps
    gates: list[Gate] = []
    terms = list(H.terms)
    for _ in range(steps):
        if order == 1:
            for term in terms:
                gates.extend(compile_pauli_p_evolution(term, dt, H.n_qubits).gates)
        else:
            for term in terms[:-1]:
                gates.extend(compile_pauli_p_evolution(term, dt / 2, H.n_qubits).gates)
            if terms:
                gates.extend(compile_pauli_p_evolution(terms[-1], dt, H.n_qubits).gates)
            for term in terms[-2::-1]:
                gates.extend(compile_pauli_p_evolution(term, dt / 2, H.n_qubits).gates)
    if H.shift:
        gates.append(Gate("P", (), H.shift * t))
    return HybridCircuit(H.n_qubits, tuple(gates))


def trotter_evolution(
    H: PauliHamiltonian, t: float, steps: int, order: int, state: HybridState
) -> HybridState:
    """Trotterized ``exp(-i H (x) p t)`` applied to ``state``."""
    circ = trotter_circuit(H, t, steps, order)
    if state.n_qubits < H.n_qubits:
        raise ShapeError(f"state has {state.n_qubits} qubits, H needs {H.n_qubits}")
    return HybridCircuit(state.n_qubits, circ.gates).apply(state)

