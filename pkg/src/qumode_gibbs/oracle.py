"""Exact thermal reference values.

Dense Gibbs states for small registers, and free-fermion partition functions
for the Kitaev ring (single momentum grid) and the periodic Ising ring
(even/odd fermion-parity sectors). All partition functions refer to the
unshifted Hamiltonians and are accumulated in the log domain; every
function accepts an array of inverse temperatures.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad_vec

from . import __version__
from .errors import CapacityError, DomainError, NumericalError, ValidationError
from .evolution import PauliHamiltonian
from .hilbert import DensityMatrix

MAX_DENSE_DIM = 4096


def dense_gibbs(H: PauliHamiltonian, beta: float):
    """``(rho, Z)`` for ``exp(-beta H)`` including the shift of ``H``."""
    if H.dimension > MAX_DENSE_DIM:
        raise CapacityError(f"dense Gibbs state limited to dimension {MAX_DENSE_DIM}")
    if beta < 0:
        raise DomainError("beta must be >= 0")
    w, v = H.eigensystem
    weights = np.exp(-beta * (w - w[0]))
    total = weights.sum()
    rho = (v * (weights / total)) @ v.conj().T
    rho = 0.5 * (rho + rho.conj().T)
    z = total * math.exp(-beta * w[0])
    return DensityMatrix(rho, {"beta": beta, "log_z": math.log(total) - beta * w[0]}), z


def dense_log_partition(H: PauliHamiltonian, beta) -> np.ndarray:
    w = H.eigensystem[0]
    beta = np.asarray(beta, dtype=float)
    return -beta * w[0] + np.log(np.sum(np.exp(-np.multiply.outer(beta, w - w[0])), axis=-1))


@dataclass(frozen=True)
class SpectrumGrid:
    """Momenta and single-particle energies of one free-fermion grid.

    ``zero_mode_term`` replaces the energy of the ``k = 0`` mode (odd Ising
    sector); it may be negative, all other energies are nonnegative.
    """

    momenta: np.ndarray
    energies: np.ndarray
    parity_sector: str = "none"
    zero_mode_term: float | None = None

    def __post_init__(self):
        if len(self.momenta) != len(self.energies):
            raise ValidationError("momenta and energies differ in length")
        if self.parity_sector not in ("none", "even", "odd"):
            raise ValidationError(f"unknown parity sector {self.parity_sector!r}")
        regular = self.energies if self.zero_mode_term is None else self.energies[1:]
        if np.any(regular < 0):
            raise ValidationError("single-particle energies must be nonnegative")

    def mode_energies(self) -> np.ndarray:
        e = np.array(self.energies, dtype=float)
        if self.zero_mode_term is not None:
            e[0] = self.zero_mode_term
        return e


def bogoliubov_energy(k, J: float, h: float):
    """``xi(k) = 2 sqrt(J^2 + h^2 - 2 h J cos k)``, i.e. ``2J sqrt(1 + l^2 - 2 l cos k)``."""
    return 2.0 * np.sqrt(np.maximum(J * J + h * h - 2.0 * h * J * np.cos(k), 0.0))


def kitaev_spectrum(L: int, J: float, mu: float) -> SpectrumGrid:
    if L < 2:
        raise DomainError("Kitaev ring needs L >= 2")
    k = 2.0 * np.pi * np.arange(L) / L
    return SpectrumGrid(k, bogoliubov_energy(k, J, mu / 2.0))


def ising_spectra(L: int, J: float, h: float):
    """Even-sector and odd-sector grids of the periodic Ising ring."""
    if L < 3:
        raise DomainError("Ising ring needs L >= 3")
    ke = 2.0 * np.pi * np.arange(L) / L + np.pi / L
    ko = 2.0 * np.pi * np.arange(L) / L
    even = SpectrumGrid(ke, bogoliubov_energy(ke, J, h), "even")
    odd = SpectrumGrid(ko, bogoliubov_energy(ko, J, h), "odd", 2.0 * (h - J))
    return even, odd


def _beta_array(beta):
    beta = np.asarray(beta, dtype=float)
    if np.any(beta < 0):
        raise DomainError("beta must be >= 0")
    return beta


def kitaev_log_partition(L: int, J: float, mu: float, beta):
    """``log prod_k 2 cosh(beta xi(k)/2)`` for the unshifted spin Hamiltonian."""
    beta = _beta_array(beta)
    xi = kitaev_spectrum(L, J, mu).energies
    half = 0.5 * np.multiply.outer(beta, xi)
    return np.sum(np.logaddexp(-half, half), axis=-1)


def kitaev_partition(L: int, J: float, mu: float, beta):
    return np.exp(kitaev_log_partition(L, J, mu, beta))


def _limit_log_partition(J: float, h: float, beta: np.ndarray, tol: float = 1e-13) -> np.ndarray:
    def integrand(k):
        half = 0.5 * beta * bogoliubov_energy(k, J, h)
        return np.logaddexp(-half, half)

    val, err = quad_vec(integrand, 0.0, np.pi, epsabs=tol, epsrel=tol, limit=2000)
    if not np.all(np.isfinite(val)) or err > 1e3 * tol * max(1.0, float(np.max(np.abs(val)))):
        raise NumericalError(
            "limit integral did not converge", {"J": J, "h": h, "error_estimate": float(err)}
        )
    return np.asarray(val) / np.pi


def kitaev_free_energy(L: int | None, J: float, mu: float, beta):
    """Free energy per site; ``L=None`` evaluates the infinite-ring integral."""
    beta = _beta_array(beta)
    if np.any(beta == 0):
        raise DomainError("free energy needs beta > 0")
    if L is None:
        per_site = _limit_log_partition(J, mu / 2.0, np.atleast_1d(beta)).reshape(beta.shape)
    else:
        per_site = kitaev_log_partition(L, J, mu, beta) / L
    return -per_site / beta


def ising_recursion_prefixes(energies: np.ndarray, beta) -> np.ndarray:
    """Log of the even/odd excitation-count sums after each mode.

    Row ``n`` holds ``(log J^e_n, log J^o_n)`` where
    ``J^e_n = J^e_{n-1} + w_n J^o_{n-1}``, ``J^o_n = w_n J^e_{n-1} + J^o_{n-1}``
    and ``w_n = exp(-beta e_n)``, starting from ``J^e_0 = 1, J^o_0 = 0``.
    """
    beta = np.asarray(beta, dtype=float)
    le = np.zeros(beta.shape)
    lo = np.full(beta.shape, -np.inf)
    rows = [np.stack([le, lo])]
    for e in energies:
        a = -beta * e
        le, lo = np.logaddexp(le, a + lo), np.logaddexp(a + le, lo)
        rows.append(np.stack([le, lo]))
    return np.array(rows)


def ising_sector_log_partitions(L: int, J: float, h: float, beta):
    """``(log Z_even, log Z_odd)``, each with its own vacuum energy ``-sum(e)/2``."""
    beta = _beta_array(beta)
    even, odd = ising_spectra(L, J, h)
    out = []
    for grid, keep in ((even, 0), (odd, 1)):
        e = grid.mode_energies()
        logs = ising_recursion_prefixes(e, beta)[-1]
        e0 = -0.5 * e.sum()
        out.append(-beta * e0 + logs[keep])
    return tuple(out)


def ising_log_partition(L: int, J: float, h: float, beta):
    le, lo = ising_sector_log_partitions(L, J, h, beta)
    return np.logaddexp(le, lo)


def ising_partition_recursion(L: int, J: float, h: float, beta):
    return np.exp(ising_log_partition(L, J, h, beta))


def log_partition(family: str, L: int | None, J: float, lam: float, beta):
    """``log Z`` of a chain at coupling ratio ``lam`` (field ``h = lam J``).

    ``family`` is ``"kitaev"`` or ``"ising"``. ``L=None`` returns the per-site
    value of the infinite ring, which both families share.
    """
    h = lam * J
    if L is None:
        return _limit_log_partition(J, h, np.atleast_1d(_beta_array(beta)))
    if family == "kitaev":
        return kitaev_log_partition(L, J, 2.0 * h, beta)
    if family == "ising":
        return ising_log_partition(L, J, h, beta)
    raise DomainError(f"unknown model family {family!r}")


def oracle_susceptibility(family: str, L: int | None, J: float, lam: float, temps, delta_h: float = 1e-4):
    """``chi = dM/dh = -(1/L) d^2F/dh^2`` by central differences in the field.

    Returns ``(chi, richardson_gap)`` where the gap is the largest change when
    the step is halved, relative to the peak of ``chi`` on the grid.
    """
    temps = np.asarray(temps, dtype=float)
    beta = 1.0 / temps
    size = 1 if L is None else L

    def chi(step):
        f = [-temps * log_partition(family, L, J, lam + d / J, beta) / size for d in (-step, 0.0, step)]
        return -(f[0] - 2.0 * f[1] + f[2]) / step**2

    c1 = chi(delta_h)
    c2 = chi(delta_h / 2.0)
    gap = float(np.max(np.abs(c1 - c2)) / max(float(np.max(np.abs(c1))), 1e-300))
    return c1, gap


def crossover_temperature(temps, chis):
    """``(T*, on_boundary)``: argmax of ``chi`` refined by a parabola in ``log T``."""
    temps = np.asarray(temps, dtype=float)
    chis = np.asarray(chis, dtype=float)
    i = int(np.argmax(chis))
    if i == 0 or i == len(temps) - 1:
        return float(temps[i]), True
    x = np.log(temps[i - 1 : i + 2])
    y = chis[i - 1 : i + 2]
    a, b, _ = np.polyfit(x, y, 2)
    if a >= 0:
        return float(temps[i]), False
    return float(np.exp(np.clip(-b / (2.0 * a), x[0], x[2]))), False


@dataclass
class ThermoCurve:
    """Observable tabulated on a strictly increasing axis."""

    axis_name: str
    axis: np.ndarray
    value_name: str
    values: np.ndarray
    metadata: dict = field(default_factory=dict)
    flags: np.ndarray | None = None

    def __post_init__(self):
        self.axis = np.asarray(self.axis, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.axis.shape != self.values.shape:
            raise ValidationError("axis and values differ in shape")
        if np.any(np.diff(self.axis) <= 0):
            raise ValidationError("axis must be strictly increasing")
        if not np.all(np.isfinite(self.values)):
            raise ValidationError("curve values must be finite")
        if self.flags is None:
            self.flags = np.zeros(self.axis.shape, dtype=bool)
        self.flags = np.asarray(self.flags, dtype=bool)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(f"# code_version: {__version__}\n")
        for key, value in self.metadata.items():
            buf.write(f"# {key}: {value}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([self.axis_name, self.value_name, "boundary"])
        for a, v, f in zip(self.axis, self.values, self.flags):
            w.writerow([repr(float(a)), repr(float(v)), int(f)])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "ThermoCurve":
        meta = {}
        rows = []
        for line in text.splitlines():
            if line.startswith("#"):
                key, _, value = line[1:].partition(":")
                meta[key.strip()] = value.strip()
            elif line.strip():
                rows.append(line)
        reader = csv.reader(rows)
        header = next(reader)
        data = [r for r in reader]
        meta.pop("code_version", None)
        return cls(
            header[0],
            [float(r[0]) for r in data],
            header[1],
            [float(r[1]) for r in data],
            meta,
            [bool(int(r[2])) for r in data],
        )


def susceptibility_and_crossover(
    family: str,
    L: int | None,
    temps,
    lambdas,
    J: float = 1.0,
    delta_h: float = 1e-4,
) -> ThermoCurve:
    """Crossover temperature ``T*(lambda)`` from oracle susceptibilities."""
    temps = np.asarray(temps, dtype=float)
    if temps.size < 3:
        raise DomainError("temperature grid needs at least three points")
    out, flags, gaps = [], [], []
    for lam in lambdas:
        chi, gap = oracle_susceptibility(family, L, J, float(lam), temps, delta_h)
        t_star, edge = crossover_temperature(temps, chi)
        out.append(t_star)
        flags.append(edge)
        gaps.append(gap)
    meta = {
        "model": family,
        "L": "limit" if L is None else L,
        "method": "oracle",
        "J": J,
        "delta_h": delta_h,
        "T_grid": f"{temps[0]:g}..{temps[-1]:g} ({temps.size} points)",
        "boundary_maxima": int(sum(flags)),
        "max_richardson_gap": max(gaps),
    }
    return ThermoCurve("lambda", lambdas, "T_star", out, meta, flags)
