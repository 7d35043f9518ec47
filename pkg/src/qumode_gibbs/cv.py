"""Continuous-variable states of the single qumode.

Quadrature convention: ``q = (a + a^dag)/sqrt(2)``, ``p = i(a^dag - a)/sqrt(2)``,
``[q, p] = i``. Position wavefunctions of Fock states are the orthonormal
Hermite functions ``h_n(q)``; momentum wavefunctions are ``(-i)^n h_n(p)``.
``exp(-i x p)`` translates a position wavefunction by ``+x``.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.special import erfc, erfcx, gammaln, roots_hermite, roots_legendre

from .errors import DomainError, NumericalError, ShapeError
from .hilbert import HybridState

_LOG_PI_QUARTER = 0.25 * math.log(math.pi)
_RESCALE = 1e100
_LOG_RESCALE = math.log(_RESCALE)


class TruncationWarning(UserWarning):
    """A truncated Fock vector misses a noticeable part of its norm."""


@dataclass(frozen=True)
class TruncationReport:
    n_c: int
    captured_norm: float


@dataclass(frozen=True, eq=False)
class CvState:
    """Fock-basis coefficients of one qumode plus a label for provenance.

    ``label`` is one of ``"resource"``, ``"squeezed_vacuum"`` or ``"custom"``.
    """

    coeffs: np.ndarray
    label: str = "custom"
    params: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex).reshape(-1)
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def cutoff(self) -> int:
        return self.coeffs.size

    def norm_squared(self) -> float:
        return float(np.vdot(self.coeffs, self.coeffs).real)

    def odd_weight(self) -> float:
        return float(np.sum(np.abs(self.coeffs[1::2]) ** 2))

    def resized(self, cutoff: int) -> "CvState":
        """Zero-pad or cut the coefficient vector to ``cutoff`` entries."""
        c = np.zeros(cutoff, dtype=complex)
        n = min(cutoff, self.cutoff)
        c[:n] = self.coeffs[:n]
        return CvState(c, self.label, dict(self.params), dict(self.metadata))

    def to_json(self) -> str:
        return json.dumps(
            {
                "label": self.label,
                "params": self.params,
                "coeffs": [[float(z.real), float(z.imag)] for z in self.coeffs],
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "CvState":
        obj = json.loads(text)
        coeffs = np.array([complex(re, im) for re, im in obj["coeffs"]])
        return cls(coeffs, obj["label"], dict(obj.get("params", {})))


def lorentzian_kernel(beta: float, p):
    """``R(beta, p) = (2/pi) beta / (beta^2 + 4 p^2)``; its Fourier transform is ``exp(-beta|h|/2)``."""
    if not beta > 0:
        raise DomainError(f"beta must be positive, got {beta}")
    p = np.asarray(p, dtype=float)
    out = (2.0 / np.pi) * beta / (beta * beta + 4.0 * p * p)
    return float(out) if out.ndim == 0 else out


def _hermite_scaled(nmax: int, x: np.ndarray, log_prefactor: np.ndarray) -> np.ndarray:
    """Rows ``n = 0..nmax`` of ``pi^{-1/4} H_n(x)/sqrt(2^n n!) * exp(log_prefactor)``.

    The three-term recurrence is run on rescaled values so that large ``|x|``
    and large ``n`` neither overflow nor lose the exponential prefactor.
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    logscale = np.asarray(log_prefactor, dtype=float).reshape(-1) - _LOG_PI_QUARTER
    logscale = np.broadcast_to(logscale, x.shape).copy()
    out = np.empty((nmax + 1, x.size))
    prev = np.zeros_like(x)
    cur = np.ones_like(x)
    out[0] = np.exp(logscale)
    for n in range(nmax):
        nxt = math.sqrt(2.0 / (n + 1)) * x * cur - math.sqrt(n / (n + 1.0)) * prev
        prev, cur = cur, nxt
        big = np.abs(cur) > _RESCALE
        if big.any():
            prev[big] /= _RESCALE
            cur[big] /= _RESCALE
            logscale[big] += _LOG_RESCALE
        out[n + 1] = cur * np.exp(logscale)
    return out


def hermite_functions(nmax: int, x) -> np.ndarray:
    """Orthonormal Hermite functions ``h_0..h_nmax`` at ``x``, shape ``(nmax+1, len(x))``."""
    x = np.asarray(x, dtype=float).reshape(-1)
    return _hermite_scaled(nmax, x, -0.5 * x * x)


def _panel_rule(edges: np.ndarray, order: int):
    xg, wg = roots_legendre(order)
    widths = np.diff(edges)
    nodes = (edges[:-1, None] + widths[:, None] * (xg + 1.0) / 2.0).ravel()
    weights = (widths[:, None] * wg / 2.0).ravel()
    return nodes, weights


def _resource_quadrature(beta: float, nmax: int, n_panels: int, order: int = 40):
    # the profile is even, so integrate q >= 0 only and double
    q_decay = 2.0 * 14.0 * math.log(10.0) / beta
    q_max = min(q_decay, math.sqrt(2.0 * nmax + 1.0) + 12.0)
    nodes, weights = _panel_rule(np.linspace(0.0, q_max, n_panels + 1), order)
    h = hermite_functions(nmax, nodes)
    profile = math.sqrt(beta / 2.0) * np.exp(-beta * nodes / 2.0)
    c = 2.0 * h @ (profile * weights)
    c[1::2] = 0.0
    return c


@lru_cache(maxsize=128)
def _resource_coefficients(beta: float, n_c: int) -> np.ndarray:
    nmax = 2 * (n_c - 1)
    n_panels = 50
    prev = _resource_quadrature(beta, nmax, n_panels)
    for _ in range(8):
        n_panels *= 2
        cur = _resource_quadrature(beta, nmax, n_panels)
        delta = float(np.max(np.abs(cur - prev)))
        if delta < 1e-13:
            cur.setflags(write=False)
            return cur
        prev = cur
    raise NumericalError(
        "resource-state quadrature did not converge",
        {"beta": beta, "n_c": n_c, "panels": n_panels, "last_change": delta},
    )


def resource_state(beta: float, n_c: int = 35, cutoff: int | None = None):
    """Truncated resource state ``|R(beta)>`` and its truncation report.

    The position wavefunction of the untruncated state is
    ``sqrt(beta/2) exp(-beta|q|/2)``. Only ``|0>, |2>, .., |2(n_c-1)>`` are
    kept; ``captured_norm`` is measured before renormalization.
    """
    if not beta > 0:
        raise DomainError(f"beta must be positive, got {beta}")
    if n_c < 1:
        raise DomainError(f"n_c must be >= 1, got {n_c}")
    width = 2 * (n_c - 1) + 1
    if cutoff is None:
        cutoff = width
    if width > cutoff:
        raise ShapeError(f"cutoff {cutoff} cannot hold n_c={n_c} even Fock states")
    raw = _resource_coefficients(float(beta), int(n_c))
    captured = float(raw @ raw)
    coeffs = np.zeros(cutoff, dtype=complex)
    coeffs[:width] = raw / math.sqrt(captured)
    report = TruncationReport(int(n_c), captured)
    state = CvState(
        coeffs,
        "resource",
        {"beta": float(beta), "n_c": int(n_c)},
        {"captured_norm": captured},
    )
    return state, report


def squeezed_vacuum_coefficients(s: float, cutoff: int) -> np.ndarray:
    """Closed-form Fock coefficients of ``|0,s>`` (position width ``1/s``).

    ``c_{2m} = (-tanh r)^m sqrt((2m)!) / (2^m m! sqrt(cosh r))`` with ``r = ln s``.
    """
    if not s > 0:
        raise DomainError(f"squeezing factor must be positive, got {s}")
    r = math.log(s)
    th = math.tanh(r)
    c = np.zeros(cutoff)
    if th == 0.0:
        c[0] = 1.0
        return c
    m = np.arange((cutoff + 1) // 2)
    log_abs = (
        -0.5 * math.log(math.cosh(r))
        + m * math.log(abs(th))
        + 0.5 * gammaln(2 * m + 1)
        - m * math.log(2.0)
        - gammaln(m + 1)
    )
    c[0::2] = np.exp(log_abs) * (-math.copysign(1.0, th)) ** m
    return c


def squeezed_vacuum(s: float, cutoff: int, warn_below: float = 0.99) -> CvState:
    """Squeezed vacuum ``|0,s>`` in a truncated Fock basis.

    Coefficients are the exact ones and are not renormalized: the projection
    only sees the components present in the register, so renormalizing would
    bias the success probability. ``metadata["captured_norm"]`` records the
    retained weight and a :class:`TruncationWarning` is issued below ``warn_below``.
    """
    c = squeezed_vacuum_coefficients(s, cutoff)
    captured = float(c @ c)
    meta = {"captured_norm": captured, "truncation_warning": captured < warn_below}
    if captured < warn_below:
        warnings.warn(
            f"cutoff {cutoff} keeps {captured:.4f} of the squeezed vacuum norm (s={s})",
            TruncationWarning,
            stacklevel=2,
        )
    return CvState(c, "squeezed_vacuum", {"s": float(s)}, meta)


def project_qumode(state: HybridState, bra: CvState):
    """Contract the Fock index with ``conj(bra)``; returns ``(qubit_state, probability)``."""
    if state.cutoff != bra.cutoff:
        raise ShapeError(f"state cutoff {state.cutoff} differs from bra cutoff {bra.cutoff}")
    out = state.matrix() @ bra.coeffs.conj()
    prob = float(np.vdot(out, out).real)
    return HybridState(out, state.n_qubits, 1, normalized=False), prob


@lru_cache(maxsize=16)
def _real_momentum_eigensystem(cutoff: int):
    w, v = eigh_tridiagonal(np.zeros(cutoff), np.sqrt(np.arange(1, cutoff) / 2.0))
    w.setflags(write=False)
    v.setflags(write=False)
    return w, v


@lru_cache(maxsize=8)
def momentum_eigensystem(cutoff: int):
    """Eigenvalues ``p_k`` and unitary eigenvectors (columns) of the truncated ``p``.

    The truncated ``p`` is ``D T D^dag`` with ``D = diag(i^n)`` and ``T`` the real
    tridiagonal matrix with off-diagonal ``sqrt(n/2)``; its eigenvalues are the
    Gauss-Hermite nodes.
    """
    if cutoff < 2:
        raise DomainError("cutoff must be >= 2")
    w, v = _real_momentum_eigensystem(cutoff)
    vecs = (1j ** np.arange(cutoff))[:, None] * v
    vecs.setflags(write=False)
    return w, vecs


def momentum_eigenvalues(cutoff: int) -> np.ndarray:
    return _real_momentum_eigensystem(cutoff)[0]


def _phases(cutoff: int) -> np.ndarray:
    return 1j ** (np.arange(cutoff) % 4)


def to_momentum_basis(coeffs: np.ndarray, axis: int = -1) -> np.ndarray:
    """Components of Fock vectors (along ``axis``) in the truncated ``p`` eigenbasis."""
    coeffs = np.moveaxis(np.asarray(coeffs, dtype=complex), axis, -1)
    cutoff = coeffs.shape[-1]
    _, v = _real_momentum_eigensystem(cutoff)
    out = (coeffs * _phases(cutoff).conj()) @ v
    return np.moveaxis(out, -1, axis)


def from_momentum_basis(comps: np.ndarray, axis: int = -1) -> np.ndarray:
    """Inverse of :func:`to_momentum_basis`."""
    comps = np.moveaxis(np.asarray(comps, dtype=complex), axis, -1)
    cutoff = comps.shape[-1]
    _, v = _real_momentum_eigensystem(cutoff)
    out = (comps @ v.T) * _phases(cutoff)
    return np.moveaxis(out, -1, axis)


def displaced_tail_weight(state: CvState, shift: float, fraction: float = 0.9) -> float:
    """Weight of ``exp(-i shift p)|state>`` on Fock levels above ``fraction * cutoff``."""
    p, _ = _real_momentum_eigensystem(state.cutoff)
    moved = from_momentum_basis(np.exp(-1j * shift * p) * to_momentum_basis(state.coeffs))
    start = int(fraction * state.cutoff)
    return float(np.sum(np.abs(moved[start:]) ** 2))


def continuum_filter_amplitude(x, beta0: float, s: float):
    """``<0,s| exp(-i x p) |R(beta0)>`` for the untruncated states.

    Equals ``pi^{1/4} sqrt(beta0/s) f(x)`` where ``f`` is the expectation of
    ``exp(-beta0 |Q - x| / 2)`` for ``Q`` normal with standard deviation ``1/s``.
    As ``s`` grows this tends to ``pi^{1/4} sqrt(beta0/s) exp(-beta0 |x| / 2)``.
    """
    x = np.abs(np.asarray(x, dtype=float))
    b = beta0 / 2.0
    sig = 1.0 / s
    z1 = (b * sig * sig - x) / (sig * math.sqrt(2.0))
    z2 = (b * sig * sig + x) / (sig * math.sqrt(2.0))
    gauss = np.exp(-x * x / (2.0 * sig * sig))
    with np.errstate(over="ignore", invalid="ignore"):
        t1 = np.where(
            z1 >= 0.0,
            gauss * erfcx(np.maximum(z1, 0.0)),
            np.exp(b * b * sig * sig / 2.0 - b * x) * erfc(np.minimum(z1, 0.0)),
        )
    t2 = gauss * erfcx(z2)
    f = 0.5 * (t1 + t2)
    out = math.pi ** 0.25 * math.sqrt(beta0 / s) * f
    return float(out) if out.ndim == 0 else out


def projected_displacement_amplitude(x, resource: CvState, s: float) -> np.ndarray:
    """``<0,s| exp(-i x p) |resource>`` with an untruncated qumode.

    The overlap integral of the Gaussian ``|0,s>`` against the shifted
    Hermite expansion is a Gaussian times a polynomial, so Gauss-Hermite
    quadrature with enough nodes is exact up to rounding.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    c = resource.coeffs
    nz = np.flatnonzero(np.abs(c) > 0)
    nmax = int(nz[-1]) if nz.size else 0
    u, w = roots_hermite(max(40, nmax // 2 + 8))
    prec = s * s + 1.0
    # nodes for every displacement at once, shape (len(x), n_nodes)
    q = (x / prec)[:, None] + math.sqrt(2.0 / prec) * u[None, :]
    y = (q - x[:, None]).ravel()
    # h_n(y) exp(y^2/2) times the Gaussian factor left over after completing the square
    log_pref = np.repeat(-0.5 * x * x * s * s / prec, u.size)
    g = (c[: nmax + 1] @ _hermite_scaled(nmax, y, log_pref)).reshape(x.size, u.size)
    return math.sqrt(s) * math.pi ** -0.25 * math.sqrt(2.0 / prec) * (g @ w)
