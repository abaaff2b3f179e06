"""Shared fixtures: the expensive canonical solves are session-scoped so the
acceptance tests and unit tests draw from the same objects."""
from __future__ import annotations

import numpy as np
import pytest
from hypothesis import settings

from mfglab.config import ProblemSpec
from mfglab.diagnostics import gamma_and_mstar, mu_weights, rescaled_profile
from mfglab.ground_state import continuation_sweep, nls_oracle
from mfglab.hamiltonian import HamiltonianSpec
from mfglab.potential import multiwell_potential, polynomial_potential

settings.register_profile("suite", deadline=None, max_examples=40)
settings.load_profile("suite")

STANDARD_FRACTIONS = (0.90, 0.93, 0.95, 0.97, 0.98, 0.99, 0.995)


@pytest.fixture(scope="session")
def ham_quad() -> HamiltonianSpec:
    return HamiltonianSpec(rprime=2.0, c_h=1.0)


@pytest.fixture(scope="session")
def base_spec_1025() -> ProblemSpec:
    return ProblemSpec(dim=1, rprime=2.0, c_h=1.0, alpha="critical", mass=1.0,
                       domain_l=8.0, grid_n=1025)


@pytest.fixture(scope="session")
def base_spec_2049() -> ProblemSpec:
    return ProblemSpec(dim=1, rprime=2.0, c_h=1.0, alpha="critical", mass=1.0,
                       domain_l=8.0, grid_n=2049)


@pytest.fixture(scope="session")
def gamma_1025(base_spec_1025):
    return gamma_and_mstar(base_spec_1025)


@pytest.fixture(scope="session")
def gamma_2049(base_spec_2049):
    return gamma_and_mstar(base_spec_2049)


@pytest.fixture(scope="session")
def limit_profile_1025(gamma_1025):
    return rescaled_profile(gamma_1025.solution)


@pytest.fixture(scope="session")
def mu_table_harmonic(limit_profile_1025):
    return mu_weights(polynomial_potential(2.0), limit_profile_1025.m)


@pytest.fixture(scope="session")
def harmonic_sweep_1025(base_spec_1025, gamma_1025):
    spec = ProblemSpec(dim=1, rprime=2.0, c_h=1.0, alpha="critical", mass=1.0,
                       domain_l=8.0, grid_n=1025, potential=polynomial_potential(2.0))
    masses = [f * gamma_1025.m_star for f in STANDARD_FRACTIONS]
    sweep = continuation_sweep(spec, masses, m_star=gamma_1025.m_star,
                               gamma=gamma_1025.gamma)
    return spec, sweep


@pytest.fixture(scope="session")
def twowell_24_sweep(gamma_1025, limit_profile_1025):
    pot = multiwell_potential([((-2.0,), 1.0, 2.0), ((2.0,), 1.0, 4.0)], radius=1.0)
    spec = ProblemSpec(dim=1, rprime=2.0, c_h=1.0, alpha="critical", mass=1.0,
                       domain_l=8.0, grid_n=1025, potential=pot)
    masses = [f * gamma_1025.m_star for f in (0.90, 0.95, 0.98, 0.995)]
    sweep = continuation_sweep(spec, masses, m_star=gamma_1025.m_star,
                               multistart_wells=True)
    table = mu_weights(pot, limit_profile_1025.m)
    return spec, sweep, table


@pytest.fixture(scope="session")
def nls_cross_1025(base_spec_1025, gamma_1025):
    sol = gamma_1025.solution
    oracle = nls_oracle(base_spec_1025, mass=sol.mass, pin_rms=base_spec_1025.domain_l / 16.0)
    return sol, oracle


@pytest.fixture
def rng():
    # fresh, identically-seeded generator per test: results never depend on
    # test execution order
    return np.random.default_rng(20250811)
