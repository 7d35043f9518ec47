"""Shared measurement helpers for the test modules."""

from __future__ import annotations

import numpy as np

from qumode_gibbs.cv import resource_state
from qumode_gibbs.evolution import PauliHamiltonian, exact_joint_unitary, trotter_evolution
from qumode_gibbs.hilbert import HybridState
from qumode_gibbs.tqs import loglog_slope


def low_photon_state(n_qubits: int, seed: int = 7, cutoff: int = 16) -> HybridState:
    """Random qubit state times a narrow-band resource state.

    A low photon number keeps the truncated ``p`` spectrum small, so the
    Trotter error is in its asymptotic regime already at moderate step counts.
    """
    rng = np.random.default_rng(seed)
    q = rng.normal(size=1 << n_qubits) + 1j * rng.normal(size=1 << n_qubits)
    q /= np.linalg.norm(q)
    mode, _ = resource_state(4.0, 4, cutoff)
    return HybridState(np.kron(q, mode.coeffs), n_qubits, cutoff)


def trotter_errors(H: PauliHamiltonian, t: float, steps, order: int, state: HybridState):
    exact = exact_joint_unitary(H, t, state).amplitudes
    return [
        float(np.linalg.norm(trotter_evolution(H, t, k, order, state).amplitudes - exact))
        for k in steps
    ]


def trotter_slope(H: PauliHamiltonian, t: float, steps, order: int, state: HybridState) -> float:
    return loglog_slope(steps, trotter_errors(H, t, steps, order, state))
