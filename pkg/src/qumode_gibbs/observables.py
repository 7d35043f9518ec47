"""Measurements on prepared thermal states: magnetization, susceptibility, crossover."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ValidationError
from .hilbert import DensityMatrix, _z_signs, trace_distance
from .models import ModelSpec
from .oracle import ThermoCurve, crossover_temperature, dense_gibbs
from .tqs import TqsConfig, run_tqs

KINDS = ("magnetization_z", "susceptibility", "free_energy", "trace_distance_to_oracle")


@dataclass(frozen=True)
class ObservableRequest:
    kind: str
    step: float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError(f"unknown observable {self.kind!r}")
        if self.step is not None and not self.step > 0:
            raise ValidationError("finite-difference step must be positive")


def magnetization_z(rho: DensityMatrix | np.ndarray, L: int) -> float:
    """``(1/L) sum_i Tr(rho Z_i)`` from the diagonal of ``rho``."""
    m = rho.matrix if isinstance(rho, DensityMatrix) else np.asarray(rho)
    if m.shape[0] != 1 << L:
        raise DomainError(f"density matrix of size {m.shape[0]} is not on {L} qubits")
    diag = np.real(np.diag(m))
    return float(_z_signs(L).sum(axis=0) @ diag) / L


def magnetization_oracle(model: ModelSpec, T: float) -> float:
    rho, _ = dense_gibbs(model.hamiltonian(), 1.0 / T)
    return magnetization_z(rho, model.n_sites)


def trace_distance_to_oracle(rho: DensityMatrix, model: ModelSpec, T: float) -> float:
    exact, _ = dense_gibbs(model.hamiltonian(), 1.0 / T)
    return trace_distance(rho, exact)


def _magnetizations(model: ModelSpec, temps, cfg: TqsConfig) -> np.ndarray:
    # one Hamiltonian (and one eigendecomposition) per field value
    H = model.hamiltonian()
    L = model.n_sites
    return np.array(
        [magnetization_z(run_tqs(H, cfg.replace(beta_target=1.0 / T)).rho, L) for T in temps]
    )


def susceptibility_tqs_curve(model: ModelSpec, temps, cfg: TqsConfig, delta_h: float = 1e-4) -> np.ndarray:
    """``dM/dh`` over a temperature grid, central differences of TQS magnetizations."""
    if not delta_h > 0:
        raise DomainError("delta_h must be positive")
    temps = np.asarray(temps, dtype=float)
    h = model.field
    up = _magnetizations(model.with_field(h + delta_h), temps, cfg)
    down = _magnetizations(model.with_field(h - delta_h), temps, cfg)
    return (up - down) / (2.0 * delta_h)


def susceptibility_tqs(model: ModelSpec, T: float, cfg: TqsConfig, delta_h: float = 1e-4) -> float:
    """``chi_m = dM/dh`` at temperature ``T`` from two TQS runs at ``h +- delta_h``.

    ``beta_target`` is set to ``1/T``; an adaptive ``cfg`` keeps its resource state.
    """
    return float(susceptibility_tqs_curve(model, [T], cfg, delta_h)[0])


def crossover_from_tqs(
    model: ModelSpec, lambdas, temps, cfg: TqsConfig, delta_h: float = 1e-4
) -> ThermoCurve:
    """``T*(lambda)`` from TQS susceptibilities with parabolic refinement."""
    temps = np.asarray(temps, dtype=float)
    out, flags = [], []
    for lam in lambdas:
        m = ModelSpec(model.kind, {**model.params, "lambda": float(lam)})
        chi = susceptibility_tqs_curve(m, temps, cfg, delta_h)
        t_star, edge = crossover_temperature(temps, chi)
        out.append(t_star)
        flags.append(edge)
    meta = {
        "model": model.kind,
        "L": model.n_sites,
        "method": "tqs",
        "s": cfg.squeeze_s,
        "n_c": cfg.n_c,
        "beta_resource": "direct" if cfg.beta_resource is None else cfg.beta_resource,
        "delta_h": delta_h,
        "T_grid": f"{temps[0]:g}..{temps[-1]:g} ({temps.size} points)",
        "boundary_maxima": int(sum(flags)),
    }
    return ThermoCurve("lambda", lambdas, "T_star", out, meta, flags)
