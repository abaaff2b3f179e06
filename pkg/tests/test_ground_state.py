import numpy as np
import pytest

from mfglab.config import ProblemSpec
from mfglab.energy import kinetic
from mfglab.errors import UnsupportedError
from mfglab.fokker_planck import fp_weak_residual
from mfglab.grid import ScalarField, integrate, make_grid
from mfglab.ground_state import (
    nls_oracle,
    potential_free_ground,
    quintic_soliton_mass,
    solve_mfg,
)
from mfglab.potential import polynomial_potential


@pytest.fixture(scope="module")
def small_mass_harmonic():
    spec = ProblemSpec(dim=1, rprime=2.0, c_h=1.0, alpha="critical", mass=1e-3,
                       domain_l=8.0, grid_n=513, potential=polynomial_potential(2.0))
    return spec, solve_mfg(spec)


def test_small_mass_matches_linearized_problem(small_mass_harmonic):
    # coupling is O(M^alpha), so the harmonic ground state is the gaussian
    # invariant density of the drift 2x with multiplier 1
    spec, sol = small_mass_harmonic
    g = spec.grid()
    x = g.axis()
    exact = np.exp(-(x**2))
    exact *= 1e-3 / integrate(ScalarField(g, exact))
    rel_l1 = integrate(ScalarField(g, np.abs(sol.pair.m.values - exact))) / 1e-3
    assert rel_l1 <= 0.02
    assert abs(sol.ergodic_constant - 1.0) <= 0.02


def test_warm_start_is_cheaper(small_mass_harmonic):
    spec, sol = small_mass_harmonic
    warm = solve_mfg(spec, init=sol.pair)
    assert warm.iterations <= sol.iterations


def test_rerun_from_own_output_converges_immediately(small_mass_harmonic):
    spec, sol = small_mass_harmonic
    again = solve_mfg(spec, init=sol.pair)
    assert again.iterations <= 2


def test_converged_invariants(small_mass_harmonic):
    spec, sol = small_mass_harmonic
    assert sol.converged
    assert sol.residual <= spec.tol.fixpoint
    assert sol.u.residual_norm <= spec.tol.hjb
    assert integrate(sol.pair.m) == pytest.approx(sol.mass, rel=1e-12)
    assert sol.ergodic_constant == sol.u.ergodic_constant


def test_potential_free_ground_properties(gamma_1025):
    sol = gamma_1025.solution
    m = sol.pair.m.values
    # negative multiplier
    assert sol.ergodic_constant < 0.0
    # even profile up to the stated asymmetry
    asym = np.max(np.abs(m - m[::-1])) / np.max(m)
    assert asym <= 1e-6
    # boundary decay
    band = np.r_[m[:5], m[-5:]]
    assert np.max(band) <= 1e-8 * np.max(m)
    # the gauge pin is inert at the self-consistent mass
    assert abs(sol.pin_scale_factor - 1.0) <= 1e-4
    assert abs(sol.pin_shift[0]) <= 1e-10


def test_potential_free_weak_fp_identity(gamma_1025):
    sol = gamma_1025.solution
    h = sol.grid.spacing
    assert fp_weak_residual(sol.pair.m, sol.pair.w) <= 10.0 * h


def test_centroid_pin_preserves_mass(base_spec_1025, gamma_1025):
    sol = potential_free_ground(base_spec_1025, mass=0.8 * gamma_1025.m_star,
                                init=gamma_1025.solution.pair)
    assert integrate(sol.pair.m) == pytest.approx(0.8 * gamma_1025.m_star, rel=1e-12)


def test_pinned_state_below_critical_mass_reports_drift(base_spec_1025, gamma_1025):
    # no localized solution exists below the critical mass: the projective
    # state is returned and the recorded dilation factor exceeds one
    sol = potential_free_ground(base_spec_1025, mass=0.6 * gamma_1025.m_star,
                                init=gamma_1025.solution.pair)
    assert sol.pin_scale_factor > 1.01


def test_nls_oracle_requires_quadratic_hamiltonian():
    spec = ProblemSpec(dim=1, rprime=1.5, grid_n=257)
    with pytest.raises(UnsupportedError):
        nls_oracle(spec)


def test_nls_oracle_harmonic_small_mass_gaussian_mode():
    # linear regime: the flow finds the oscillator ground mode exp(-x^2/2)
    # with unit multiplier (mu = 1)
    spec = ProblemSpec(dim=1, rprime=2.0, c_h=1.0, alpha="critical", mass=1e-4,
                       domain_l=8.0, grid_n=513, potential=polynomial_potential(2.0))
    res = nls_oracle(spec)
    g = spec.grid()
    x = g.axis()
    mode = np.exp(-(x**2) / 2.0)
    mode *= np.sqrt(1e-4 / integrate(ScalarField(g, mode**2)))
    assert np.max(np.abs(res.v.values - mode)) / mode.max() <= 5e-3
    assert res.chemical_potential == pytest.approx(1.0, abs=5e-3)


def test_nls_cross_validation(nls_cross_1025):
    sol, oracle = nls_cross_1025
    grid = sol.grid
    l1 = integrate(ScalarField(grid, np.abs(sol.pair.m.values - oracle.pair.m.values)))
    assert l1 / sol.mass <= 2e-2
    assert abs(oracle.chemical_potential / sol.ergodic_constant - 1.0) <= 0.02


def test_soliton_mass_closed_form():
    from mfglab.hamiltonian import HamiltonianSpec

    val = quintic_soliton_mass(HamiltonianSpec(rprime=2.0, c_h=1.0))
    assert val == pytest.approx(np.sqrt(3.0) * np.pi / 2.0, rel=1e-10)
    # the reduction coefficient scales the critical mass by sqrt(mu) = C_H^(-1/2)
    val2 = quintic_soliton_mass(HamiltonianSpec(rprime=2.0, c_h=4.0))
    assert val2 == pytest.approx(val / 2.0, rel=1e-12)


def test_lambda_epsilon_scaling_limit(harmonic_sweep_1025, gamma_1025):
    _, sweep = harmonic_sweep_1025
    sol, rep = sweep[-1]
    assert rep.mass_fraction == pytest.approx(0.995, abs=1e-9)
    r, n = 2.0, 1
    predicted = -r / (n * gamma_1025.m_star)
    ratio = sol.ergodic_constant * rep.epsilon**r / predicted
    assert 0.95 <= ratio <= 1.05


def test_sweep_masses_must_increase(base_spec_1025):
    from mfglab.ground_state import continuation_sweep

    with pytest.raises(ValueError):
        continuation_sweep(base_spec_1025, [1.0, 0.5])


def test_sweep_empty_mass_list(base_spec_1025):
    from mfglab.ground_state import continuation_sweep

    assert continuation_sweep(base_spec_1025, []) == []


def test_sweep_monotone_trends(harmonic_sweep_1025):
    _, sweep = harmonic_sweep_1025
    eps = [rep.epsilon for _, rep in sweep]
    energies = [rep.energy for _, rep in sweep]
    assert all(b < a for a, b in zip(eps, eps[1:]))
    assert all(b < a for a, b in zip(energies, energies[1:]))
    assert all(e > 0 for e in energies)


def test_two_dimensional_smoke():
    spec = ProblemSpec(dim=2, rprime=2.0, c_h=1.0, alpha="critical", mass=1e-3,
                       domain_l=6.0, grid_n=129, potential=polynomial_potential(2.0))
    sol = solve_mfg(spec)
    # linearized 2D oscillator: multiplier 2, gaussian invariant density
    assert sol.ergodic_constant == pytest.approx(2.0, abs=0.02)
    g = spec.grid()
    xs, ys = g.coords()
    exact = np.exp(-(xs**2 + ys**2))
    exact *= 1e-3 / integrate(ScalarField(g, exact))
    rel = integrate(ScalarField(g, np.abs(sol.pair.m.values - exact))) / 1e-3
    assert rel <= 0.05
