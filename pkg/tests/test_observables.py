from __future__ import annotations

import numpy as np
import pytest

from qumode_gibbs.errors import DomainError, ValidationError
from qumode_gibbs.hilbert import DensityMatrix
from qumode_gibbs.models import ModelSpec
from qumode_gibbs.observables import (
    ObservableRequest,
    crossover_from_tqs,
    magnetization_oracle,
    magnetization_z,
    susceptibility_tqs,
    susceptibility_tqs_curve,
    trace_distance_to_oracle,
)
from qumode_gibbs.oracle import dense_log_partition, oracle_susceptibility, susceptibility_and_crossover
from qumode_gibbs.tqs import TqsConfig, run_tqs

PAPER_CFG = TqsConfig(1.0, beta_resource=4.0, squeeze_s=10.0, n_c=35)
TEMPS = np.geomspace(0.005, 4, 160)


def test_magnetization_examples():
    up = np.zeros((8, 8))
    up[0, 0] = 1.0
    assert magnetization_z(up, 3) == pytest.approx(1.0)
    assert magnetization_z(DensityMatrix(np.eye(8) / 8), 3) == pytest.approx(0.0, abs=1e-15)
    with pytest.raises(DomainError):
        magnetization_z(np.eye(4) / 4, 3)


def test_magnetization_counts_each_site():
    # |0 1> has one spin up and one down
    rho = np.zeros((4, 4))
    rho[1, 1] = 1.0
    assert magnetization_z(rho, 2) == pytest.approx(0.0)


def test_request_validation():
    ObservableRequest("susceptibility", 1e-4)
    with pytest.raises(ValidationError):
        ObservableRequest("entropy")
    with pytest.raises(ValidationError):
        ObservableRequest("susceptibility", -1.0)


def test_tqs_magnetization_against_dense():
    m = ModelSpec("kitaev", {"L": 2, "lambda": 1.0})
    res = run_tqs(m.hamiltonian(), TqsConfig(2.0, squeeze_s=10.0, n_c=35))
    assert abs(magnetization_z(res.rho, 2) - magnetization_oracle(m, 0.5)) <= 2e-2
    assert trace_distance_to_oracle(res.rho, m, 0.5) <= 5e-2


def test_susceptibility_vanishes_at_high_temperature():
    m = ModelSpec("kitaev", {"L": 2, "lambda": 1.0})
    assert abs(susceptibility_tqs(m, 1e3, PAPER_CFG)) <= 1e-2


def test_susceptibility_step_validation():
    m = ModelSpec("kitaev", {"L": 2})
    with pytest.raises(DomainError):
        susceptibility_tqs_curve(m, [1.0], PAPER_CFG, delta_h=0.0)


def test_susceptibility_sign_and_scale_away_from_criticality():
    # at these settings the amplitude is biased by tens of percent while the
    # peak position is accurate; only sign and order of magnitude are checked
    m = ModelSpec("kitaev", {"L": 2, "lambda": 0.6})
    temps = np.array([0.5, 1.0, 2.0])
    chi = susceptibility_tqs_curve(m, temps, PAPER_CFG)
    ref, _ = oracle_susceptibility("kitaev", 2, 1.0, 0.6, temps)
    assert np.all(chi > 0)
    assert np.all(np.abs(chi / ref - 1) < 0.5)


def test_crossover_at_criticality_matches_oracle():
    m = ModelSpec("kitaev", {"L": 2})
    tqs = crossover_from_tqs(m, [1.0], TEMPS, PAPER_CFG)
    ref = susceptibility_and_crossover("kitaev", 2, TEMPS, [1.0])
    assert tqs.values[0] == pytest.approx(ref.values[0], rel=0.1)


def test_crossover_far_from_criticality():
    m = ModelSpec("kitaev", {"L": 2})
    tqs = crossover_from_tqs(m, [0.5], TEMPS, PAPER_CFG)
    ref = susceptibility_and_crossover("kitaev", 2, TEMPS, [0.5])
    assert not tqs.flags[0]
    assert tqs.values[0] == pytest.approx(ref.values[0], rel=0.15)
    assert tqs.metadata["method"] == "tqs" and tqs.metadata["n_c"] == 35


# The truncated resource state smooths the filter cusp at zero energy over a
# width of roughly 0.08 at n_c=35, so level splittings below that scale are
# not resolved. The targets below need a sharper filter than this truncation
# provides; they stay as strict xfails so an unexpected pass is noticed.

CUSP = "n_c=35 smooths the filter cusp and hides small level splittings"


@pytest.mark.xfail(strict=True, reason=CUSP)
def test_oracle_agreement_at_strong_squeezing():
    cfg = TqsConfig(1.0, squeeze_s=50.0, n_c=35)
    for lam in (0.6, 1.0, 1.4):
        m = ModelSpec("kitaev", {"L": 2, "lambda": lam})
        for T in (0.3, 0.6, 1.0):
            res = run_tqs(m.hamiltonian(), cfg.replace(beta_target=1.0 / T))
            assert abs(magnetization_z(res.rho, 2) - magnetization_oracle(m, T)) <= 1e-3
            Z = np.exp(float(dense_log_partition(m.hamiltonian(), 1.0 / T)))
            assert abs(res.z_estimate / Z - 1) <= 1e-3


@pytest.mark.xfail(strict=True, reason=CUSP)
def test_susceptibility_matches_free_energy_curvature():
    temps = np.array([0.3, 0.6])
    for lam in (0.8, 1.0, 1.2):
        m = ModelSpec("kitaev", {"L": 2, "lambda": lam})
        chi = susceptibility_tqs_curve(m, temps, PAPER_CFG)
        ref, _ = oracle_susceptibility("kitaev", 2, 1.0, lam, temps)
        assert np.all(np.abs(chi / ref - 1) <= 0.05)


@pytest.mark.xfail(strict=True, reason=CUSP)
def test_tqs_susceptibility_is_nonnegative():
    # just off criticality the lowest pair of levels sits inside the smoothed cusp
    m = ModelSpec("kitaev", {"L": 2, "lambda": 0.95})
    assert np.all(susceptibility_tqs_curve(m, TEMPS, PAPER_CFG) >= -1e-6)

