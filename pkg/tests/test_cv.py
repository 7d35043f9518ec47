from __future__ import annotations

import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.polynomial.hermite import hermgauss
from scipy.integrate import quad
from scipy.linalg import expm
from scipy.special import eval_hermite, factorial

from qumode_gibbs.cv import (
    CvState,
    TruncationWarning,
    continuum_filter_amplitude,
    from_momentum_basis,
    hermite_functions,
    lorentzian_kernel,
    momentum_eigensystem,
    project_qumode,
    projected_displacement_amplitude,
    resource_state,
    squeezed_vacuum,
    squeezed_vacuum_coefficients,
    to_momentum_basis,
)
from qumode_gibbs.errors import DomainError, ShapeError
from qumode_gibbs.hilbert import FockSpace, HybridState


def hermite_function_reference(n, x):
    """Textbook normalization, fine for the small orders used here."""
    norm = 1.0 / math.sqrt(2.0**n * factorial(n) * math.sqrt(math.pi))
    return norm * eval_hermite(n, x) * np.exp(-x * x / 2)


def test_lorentzian_examples():
    assert lorentzian_kernel(2.0, 0.0) == pytest.approx(1 / math.pi, rel=1e-15)
    assert lorentzian_kernel(1.0, 0.5) == pytest.approx(1 / math.pi, rel=1e-15)
    with pytest.raises(DomainError):
        lorentzian_kernel(0.0, 1.0)


def test_lorentzian_fourier_identity():
    beta, h = 0.9, 1.7
    half, _ = quad(lambda p: lorentzian_kernel(beta, p), 0, np.inf, weight="cos", wvar=h)
    assert 2 * half == pytest.approx(math.exp(-beta * h / 2), rel=1e-8)


def test_hermite_functions_match_textbook():
    x = np.linspace(-6, 6, 41)
    h = hermite_functions(20, x)
    for n in range(21):
        assert np.allclose(h[n], hermite_function_reference(n, x), atol=1e-12)


def test_hermite_functions_large_argument_finite():
    h = hermite_functions(400, np.array([0.0, 25.0, 60.0]))
    assert np.all(np.isfinite(h))
    # orthonormality on a Gauss-Hermite grid
    x, w = hermgauss(120)
    g = hermite_functions(60, x) * np.sqrt(w * np.exp(x * x))
    assert np.allclose(g @ g.T, np.eye(61), atol=1e-12)


def resource_coefficient_reference(beta, n):
    f = lambda q: math.sqrt(beta / 2) * math.exp(-beta * q / 2) * hermite_function_reference(n, q)
    val, _ = quad(f, 0, 40, limit=400, epsabs=1e-14, epsrel=1e-13)
    return 2.0 * val  # even integrand for even n


@pytest.mark.parametrize("beta", [1.0, 4.0])
def test_resource_coefficients_against_direct_integration(beta):
    state, report = resource_state(beta, n_c=10)
    raw = state.coeffs.real * math.sqrt(report.captured_norm)
    for m in range(10):
        assert raw[2 * m] == pytest.approx(resource_coefficient_reference(beta, 2 * m), abs=1e-10)


def test_resource_odd_coefficients_vanish():
    state, _ = resource_state(4.0, 35)
    assert np.all(state.coeffs[1::2] == 0)
    assert state.odd_weight() == 0.0


def test_resource_captured_norm_seven_levels():
    _, report = resource_state(4.0, n_c=7)
    assert report.captured_norm >= 0.95


def test_resource_truncation_error_is_parseval_limited():
    # The untruncated wavefunction has a cusp, so the L2 error of the truncated
    # expansion is exactly the discarded weight; it cannot be made arbitrarily small.
    state, report = resource_state(4.0, 35)
    q = np.linspace(-30, 30, 200001)
    psi = (state.coeffs.real * math.sqrt(report.captured_norm)) @ hermite_functions(state.cutoff - 1, q)
    exact = math.sqrt(2.0) * np.exp(-2.0 * np.abs(q))
    err2 = np.trapezoid((psi - exact) ** 2, q)
    assert err2 == pytest.approx(1.0 - report.captured_norm, rel=1e-5)
    window = np.abs(q) <= 3
    local = math.sqrt(np.trapezoid((psi[window] - exact[window]) ** 2, q[window]))
    assert local <= math.sqrt(1.0 - report.captured_norm) + 1e-9


def test_resource_normalized_and_sized():
    state, _ = resource_state(2.0, 5, cutoff=12)
    assert state.cutoff == 12
    assert state.norm_squared() == pytest.approx(1.0, abs=1e-14)
    with pytest.raises(ShapeError):
        resource_state(2.0, 10, cutoff=10)
    with pytest.raises(DomainError):
        resource_state(-1.0)


def test_squeezed_vacuum_unit_squeezing():
    c = squeezed_vacuum_coefficients(1.0, 6)
    assert np.array_equal(c, [1, 0, 0, 0, 0, 0])


def test_squeezed_vacuum_against_quadrature():
    # <n|0,s> = int dp <n|p><p|0,s> with <p|n> = (-i)^n h_n(p)
    s, cutoff = 2.0, 40
    x, w = hermgauss(200)
    # the integrand is h_n(p) exp(-p^2/(2 s^2)); divide out the Gauss-Hermite weight
    psi_p = s**-0.5 * math.pi**-0.25 * np.exp(-x * x / (2 * s * s))
    h = hermite_functions(cutoff - 1, x)
    ref = np.array([(1j**n) * np.sum(w * np.exp(x * x) * h[n] * psi_p) for n in range(cutoff)])
    assert np.max(np.abs(ref.imag)) < 1e-12
    assert np.max(np.abs(squeezed_vacuum_coefficients(s, cutoff) - ref.real)) <= 1e-10


def test_squeezed_overlap_symmetry():
    a = squeezed_vacuum_coefficients(2.0, 400)
    b = squeezed_vacuum_coefficients(0.5, 400)
    assert a @ b == pytest.approx(b @ a, abs=1e-15)
    assert a @ b == pytest.approx(math.sqrt(2.0 / (4.0 + 0.25)), rel=1e-9)


def test_squeezed_vacuum_position_width():
    s = 3.0
    c = squeezed_vacuum_coefficients(s, 200)
    q = np.linspace(-2, 2, 9)
    psi = c @ hermite_functions(199, q)
    assert np.allclose(psi, math.sqrt(s) * math.pi**-0.25 * np.exp(-(s * q) ** 2 / 2), atol=1e-9)


def test_squeezed_vacuum_truncation_warning():
    with pytest.warns(TruncationWarning):
        st_ = squeezed_vacuum(20.0, 10)
    assert st_.metadata["truncation_warning"]
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        full = squeezed_vacuum(2.0, 200)
    assert full.metadata["captured_norm"] == pytest.approx(1.0, abs=1e-12)


def test_project_product_state():
    rng = np.random.default_rng(0)
    qubits = rng.normal(size=4) + 1j * rng.normal(size=4)
    qubits /= np.linalg.norm(qubits)
    sq = squeezed_vacuum(2.0, 200)
    bra = CvState(sq.coeffs / math.sqrt(sq.norm_squared()))
    out, prob = project_qumode(HybridState(np.kron(qubits, bra.coeffs), 2, 200), bra)
    assert prob == pytest.approx(1.0, abs=1e-12)
    assert np.allclose(out.amplitudes, qubits, atol=1e-12)


def test_project_orthogonal():
    state = HybridState(np.kron([1, 0], [0, 1, 0]), 1, 3)
    out, prob = project_qumode(state, CvState(np.array([1.0, 0, 0])))
    assert prob == 0.0 and not np.any(out.amplitudes)
    with pytest.raises(ShapeError):
        project_qumode(state, CvState(np.array([1.0, 0])))


def test_momentum_eigensystem_diagonalizes_p():
    cutoff = 24
    w, v = momentum_eigensystem(cutoff)
    p = FockSpace(cutoff).momentum()
    assert np.allclose(v.conj().T @ v, np.eye(cutoff), atol=1e-12)
    assert np.allclose(v @ np.diag(w) @ v.conj().T, p, atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 64), st.integers(0, 2**31 - 1))
def test_momentum_basis_roundtrip(cutoff, seed):
    rng = np.random.default_rng(seed)
    c = rng.normal(size=(3, cutoff)) + 1j * rng.normal(size=(3, cutoff))
    back = from_momentum_basis(to_momentum_basis(c, axis=1), axis=1)
    assert np.allclose(back, c, atol=1e-12)
    # unitary change of basis preserves norms
    assert np.allclose(
        np.linalg.norm(to_momentum_basis(c, axis=1), axis=1), np.linalg.norm(c, axis=1)
    )


def test_displacement_matches_dense_exponential():
    cutoff = 30
    rng = np.random.default_rng(5)
    c = rng.normal(size=cutoff) + 1j * rng.normal(size=cutoff)
    w, _ = momentum_eigensystem(cutoff)
    x = 0.8
    fast = from_momentum_basis(np.exp(-1j * x * w) * to_momentum_basis(c))
    dense = expm(-1j * x * FockSpace(cutoff).momentum()) @ c
    assert np.allclose(fast, dense, atol=1e-10)


def continuum_reference(x, beta0, s):
    f = lambda q: (
        math.sqrt(s) * math.pi**-0.25 * math.exp(-(s * q) ** 2 / 2)
        * math.sqrt(beta0 / 2) * math.exp(-beta0 * abs(q - x) / 2)
    )
    # split at the cusp for accuracy
    a, _ = quad(f, -np.inf, x, limit=400, epsabs=1e-15)
    b, _ = quad(f, x, np.inf, limit=400, epsabs=1e-15)
    return a + b


@pytest.mark.parametrize("x", [0.0, 0.05, 0.3, 1.0, 2.5])
@pytest.mark.parametrize("s", [2.0, 10.0])
def test_continuum_filter_against_integration(x, s):
    assert continuum_filter_amplitude(x, 1.3, s) == pytest.approx(continuum_reference(x, 1.3, s), rel=1e-9, abs=1e-14)


def test_continuum_filter_far_tail_stable():
    val = continuum_filter_amplitude(np.array([50.0, 200.0]), 1.0, 100.0)
    assert np.all(np.isfinite(val)) and np.all(val > 0)


def test_projected_amplitude_matches_truncated_fock_route():
    resource, _ = resource_state(2.0, 6)
    s = 3.0
    cutoff = 160
    big = resource.resized(cutoff)
    sq = squeezed_vacuum_coefficients(s, cutoff)
    w, _ = momentum_eigensystem(cutoff)
    xs = np.array([0.0, 0.4, 1.5])
    fock = [
        sq @ from_momentum_basis(np.exp(-1j * x * w) * to_momentum_basis(big.coeffs)) for x in xs
    ]
    assert np.allclose(projected_displacement_amplitude(xs, resource, s), fock, atol=1e-12)


def test_cvstate_json_roundtrip():
    state, _ = resource_state(1.5, 4)
    back = CvState.from_json(state.to_json())
    assert np.array_equal(back.coeffs, state.coeffs)
    assert back.label == "resource" and back.params["n_c"] == 4
