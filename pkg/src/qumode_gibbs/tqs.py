"""Thermal-state preparation by a qumode-controlled evolution and squeezed post-selection.

Pipeline: ``N`` Bell pairs times the resource state ``|R(beta0)>``, then
``exp(-i H p t)`` on the system half with ``t = beta/beta0``, projection of
the qumode onto ``|0,s>`` and a partial trace over the ancilla qubits.

Because the Bell pairs make the qubit register a vectorized identity, the
unmaterialized exact route only needs the filter amplitude
``a(E) = <0,s| exp(-i E t p) |R>`` for each eigenvalue of ``H``; the
materialized route builds the full hybrid register and is used for the
Trotter path and for cross-checks.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from functools import lru_cache

import numpy as np

from .cv import (
    displaced_tail_weight,
    momentum_eigenvalues,
    project_qumode,
    projected_displacement_amplitude,
    resource_state,
    squeezed_vacuum,
    squeezed_vacuum_coefficients,
    to_momentum_basis,
)
from .errors import ConfigError, DomainError, PostSelectionError
from .evolution import PauliHamiltonian, exact_joint_unitary, trotter_evolution
from .hilbert import DensityMatrix, HybridState, bell_pairs, partial_trace_ancilla
from .oracle import dense_gibbs

MAX_FOCK_CUTOFF = 4096
LEAKAGE_TOL = 1e-12


@dataclass(frozen=True)
class TqsConfig:
    """Run parameters.

    ``cutoff`` is an int (truncated Fock register), ``"auto"`` (smallest
    register that holds the displaced resource state, falling back to an
    untruncated qumode when that exceeds ``MAX_FOCK_CUTOFF``) or ``None``
    (untruncated qumode, exact route only).

    ``energy_offset`` lifts the spectrum by a constant before filtering;
    ``z_estimate`` and ``f_estimate`` are corrected back to ``H`` itself. With
    the default tight shift the ground level sits where the resource
    wavefunction has its cusp and the filter error is first order in ``1/s``;
    an offset with ``offset * t >> 1/s`` turns it into a uniform factor
    ``exp(beta0^2 / (4 s^2))`` on ``Z`` that cancels in ``rho``.
    """

    beta_target: float
    beta_resource: float | None = None
    squeeze_s: float = 10.0
    n_c: int = 35
    evolution_path: str = "exact"
    trotter_steps: int = 64
    trotter_order: int = 2
    cutoff: int | str | None = "auto"
    success_floor: float = 1e-12
    materialize: bool = False
    energy_offset: float = 0.0

    def __post_init__(self):
        if not self.beta_target > 0:
            raise ConfigError("beta_target must be positive")
        if self.beta_resource is not None and not self.beta_resource > 0:
            raise ConfigError("beta_resource must be positive")
        if not self.squeeze_s > 0:
            raise ConfigError("squeeze_s must be positive")
        if self.n_c < 1:
            raise ConfigError("n_c must be >= 1")
        if self.evolution_path not in ("exact", "trotter"):
            raise ConfigError(f"unknown evolution path {self.evolution_path!r}")
        if self.trotter_steps < 1 or self.trotter_order not in (1, 2):
            raise ConfigError("trotter needs steps >= 1 and order 1 or 2")
        if isinstance(self.cutoff, str) and self.cutoff != "auto":
            raise ConfigError(f"cutoff must be an int, 'auto' or None, got {self.cutoff!r}")
        if isinstance(self.cutoff, int) and self.cutoff < 2 * self.n_c - 1:
            raise ConfigError(f"cutoff {self.cutoff} cannot hold n_c={self.n_c}")
        if self.cutoff is None and self.needs_register:
            raise ConfigError("the materialized and Trotter routes need a finite cutoff")
        if not math.isfinite(self.time):
            raise ConfigError("beta_target/beta_resource must be finite")
        if not (math.isfinite(self.energy_offset) and self.energy_offset >= 0):
            raise ConfigError("energy_offset must be finite and >= 0")

    @property
    def time(self) -> float:
        return self.beta_target / self.beta0

    @property
    def beta0(self) -> float:
        """Resource inverse temperature; ``beta_resource=None`` means direct mode (``beta0 = beta``)."""
        return float(self.beta_target if self.beta_resource is None else self.beta_resource)

    @property
    def adaptive(self) -> bool:
        return self.beta_resource is not None

    @property
    def needs_register(self) -> bool:
        return self.materialize or self.evolution_path == "trotter"

    def replace(self, **changes) -> "TqsConfig":
        """Copy with changes; a direct-mode config stays direct."""
        data = asdict(self)
        data.update(changes)
        return TqsConfig(**data)


@dataclass(frozen=True, eq=False)
class TqsResult:
    rho: DensityMatrix
    success_probability: float
    raw_norm: float
    z_estimate: float
    f_estimate: float
    diagnostics: dict = field(default_factory=dict)
    amplitudes: np.ndarray | None = None

    def to_json(self) -> str:
        m = self.rho.matrix
        return json.dumps(
            {
                "rho": [[[float(z.real), float(z.imag)] for z in row] for row in m],
                "success_probability": self.success_probability,
                "raw_norm": self.raw_norm,
                "z_estimate": self.z_estimate,
                "f_estimate": self.f_estimate,
                "diagnostics": self.diagnostics,
            },
            sort_keys=True,
        )


def partition_estimate(raw_norm, cfg: TqsConfig, dimension: int | None = None) -> float:
    """``s D / (beta0 sqrt(pi)) * raw_norm^2``, which tends to ``Z(beta)`` as ``s`` grows.

    ``raw_norm`` may be a :class:`TqsResult`, in which case ``dimension`` is
    read from its density matrix.
    """
    if isinstance(raw_norm, TqsResult):
        dimension = raw_norm.rho.dimension
        raw_norm = raw_norm.raw_norm
    if dimension is None:
        raise DomainError("dimension is required with a bare norm")
    return cfg.squeeze_s * dimension / (cfg.beta0 * math.sqrt(math.pi)) * raw_norm**2


def free_energy_estimate(z_estimate: float, beta: float) -> float:
    if not z_estimate > 0:
        raise DomainError("z_estimate must be positive")
    return -math.log(z_estimate) / beta


@lru_cache(maxsize=256)
def _leaks(beta0: float, n_c: int, cutoff: int, shift: float) -> bool:
    state, _ = resource_state(beta0, n_c, cutoff)
    return displaced_tail_weight(state, shift) > LEAKAGE_TOL


def _shift_bin(shift: float) -> float:
    # checking a slightly larger shift is conservative and keeps the cache small
    shift = max(abs(shift), 0.25)
    return 2.0 ** (math.ceil(8.0 * math.log2(shift)) / 8.0)


def resolve_cutoff(max_shift: float, cfg: TqsConfig) -> int | None:
    """Fock cutoff for displacements up to ``max_shift``.

    The truncated ``p`` translates faithfully only while the state stays well
    inside the register, which reaches positions near ``sqrt(2 cutoff)``. The
    guess is rounded up to a power of two and doubled until the displaced
    resource leaks less than ``LEAKAGE_TOL`` into the top tenth of the register.
    """
    if cfg.cutoff != "auto":
        return cfg.cutoff
    reach = abs(max_shift) + math.sqrt(4.0 * cfg.n_c + 1.0) + 8.0
    # powers of two keep the number of distinct p eigensystems small
    cutoff = 1 << max(6, math.ceil(math.log2(reach * reach / 2.0)))
    while cutoff <= MAX_FOCK_CUTOFF:
        if not _leaks(float(cfg.beta0), cfg.n_c, cutoff, _shift_bin(max_shift)):
            return cutoff
        cutoff *= 2
    if cfg.needs_register:
        raise ConfigError(
            f"displacement {max_shift:.3g} needs a Fock cutoff above {MAX_FOCK_CUTOFF}; "
            "use the exact unmaterialized route"
        )
    return None


@lru_cache(maxsize=64)
def _pbasis_overlap(beta0: float, n_c: int, s: float, cutoff: int):
    # conj(<p_k|0,s>) <p_k|R> for every p eigenvector
    state, _ = resource_state(beta0, n_c, cutoff)
    p = momentum_eigenvalues(cutoff)
    r = to_momentum_basis(state.coeffs)
    sq = to_momentum_basis(squeezed_vacuum_coefficients(s, cutoff))
    weights = sq.conj() * r
    weights.setflags(write=False)
    return p, weights


def filter_amplitudes(energies: np.ndarray, cfg: TqsConfig, cutoff: int | None) -> np.ndarray:
    """``<0,s| exp(-i E t p) |R(beta0)>`` for each energy."""
    x = np.asarray(energies, dtype=float) * cfg.time
    if cutoff is None:
        state, _ = resource_state(cfg.beta0, cfg.n_c)
        return projected_displacement_amplitude(x, state, cfg.squeeze_s)
    p, weights = _pbasis_overlap(float(cfg.beta0), cfg.n_c, float(cfg.squeeze_s), cutoff)
    return np.exp(-1j * np.multiply.outer(x, p)) @ weights


def _check_spectrum(H: PauliHamiltonian) -> np.ndarray:
    energies = H.eigensystem[0]
    scale = max(1.0, float(np.max(np.abs(energies))))
    if energies[0] < -1e-9 * scale:
        raise DomainError(
            f"H has minimum eigenvalue {energies[0]:.3g}; shift it to a nonnegative spectrum"
        )
    return energies


def run_tqs(H: PauliHamiltonian, cfg: TqsConfig) -> TqsResult:
    """Prepare the filtered thermal state of ``H`` at ``cfg.beta_target``."""
    _check_spectrum(H)
    if cfg.energy_offset:
        H = H.with_shift(H.shift + cfg.energy_offset)
    energies, u = H.eigensystem
    D = H.dimension
    cutoff = resolve_cutoff(float(np.max(np.abs(energies))) * cfg.time, cfg)
    _, report = resource_state(cfg.beta0, cfg.n_c)
    diagnostics = {
        "resource_captured_norm": report.captured_norm,
        "n_c": cfg.n_c,
        "cutoff": "none" if cutoff is None else cutoff,
        "time": cfg.time,
        "route": "register" if cfg.needs_register else "eigen",
        "evolution_path": cfg.evolution_path,
        "energy_offset": cfg.energy_offset,
    }
    amplitudes = None
    if cfg.needs_register:
        rho_un = _register_route(H, cfg, cutoff, diagnostics)
    else:
        amplitudes = filter_amplitudes(energies, cfg, cutoff)
        weights = np.abs(amplitudes) ** 2 / D
        rho_un = (u * weights) @ u.conj().T
    success = float(np.trace(rho_un).real)
    if cutoff is not None:
        sq_norm = float(np.sum(squeezed_vacuum_coefficients(cfg.squeeze_s, cutoff) ** 2))
        diagnostics["squeezed_captured_norm"] = sq_norm
    if not success >= cfg.success_floor:
        raise PostSelectionError(
            f"success probability {success:.3g} below floor {cfg.success_floor:.3g}",
            {**diagnostics, "success_probability": success},
        )
    rho = DensityMatrix(0.5 * (rho_un + rho_un.conj().T) / success, {"pre_norm_trace": success})
    raw_norm = math.sqrt(success)
    z = partition_estimate(raw_norm, cfg, D)
    if cfg.energy_offset:
        diagnostics["z_estimate_offset_spectrum"] = z
        z *= math.exp(cfg.beta_target * cfg.energy_offset)
    return TqsResult(
        rho=rho,
        success_probability=success,
        raw_norm=raw_norm,
        z_estimate=z,
        f_estimate=free_energy_estimate(z, cfg.beta_target),
        diagnostics=diagnostics,
        amplitudes=amplitudes,
    )


def _register_route(H: PauliHamiltonian, cfg: TqsConfig, cutoff: int, diagnostics: dict) -> np.ndarray:
    n = H.n_qubits
    resource, _ = resource_state(cfg.beta0, cfg.n_c, cutoff)
    state = HybridState.product(bell_pairs(n), resource.coeffs)
    if cfg.evolution_path == "exact":
        state = exact_joint_unitary(H, cfg.time, state)
    else:
        state = trotter_evolution(H, cfg.time, cfg.trotter_steps, cfg.trotter_order, state)
        diagnostics["trotter_steps"] = cfg.trotter_steps
        diagnostics["trotter_order"] = cfg.trotter_order
    bra = squeezed_vacuum(cfg.squeeze_s, cutoff, warn_below=0.0)
    projected, _ = project_qumode(state, bra)
    return partial_trace_ancilla(projected).matrix


def error_scaling_probe(H: PauliHamiltonian, betas, ss, beta_resource: float | None = None, **cfg_kwargs):
    """Rows ``(beta, s, beta0, z_estimate, z_exact, rel_error, signed_error)``.

    ``beta_resource=None`` is the direct mode (``beta0 = beta``).
    """
    betas = list(betas)
    ss = list(ss)
    if not betas or not ss:
        raise DomainError("beta and s grids must be nonempty")
    rows = []
    for beta in betas:
        _, z_exact = dense_gibbs(H, beta)
        for s in ss:
            cfg = TqsConfig(beta, beta_resource, s, **cfg_kwargs)
            z = run_tqs(H, cfg).z_estimate
            signed = (z - z_exact) / z_exact
            rows.append((beta, s, cfg.beta0, z, z_exact, abs(signed), signed))
    return rows


def loglog_slope(xs, ys) -> float:
    return float(np.polyfit(np.log(np.asarray(xs, float)), np.log(np.asarray(ys, float)), 1)[0])
