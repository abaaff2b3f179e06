"""Numerical laboratory for mass-critical stationary mean-field-games ground states."""

from .config import ProblemSpec, Tolerances, load_spec
from .energy import (
    FlowPair,
    gn_inequality_slack,
    gn_ratio,
    kinetic,
    mollified_energy,
    scale_pair,
    total_energy,
)
from .grid import Grid, ScalarField, VectorField, integrate, make_grid
from .ground_state import (
    MfgSolution,
    NlsGroundState,
    continuation_sweep,
    find_critical_mass,
    nls_oracle,
    potential_free_ground,
    quintic_soliton_mass,
    solve_mfg,
)
from .hamiltonian import HamiltonianSpec, h_grad, h_value, lagrangian
from .hjb import ErgodicSolution, drift_from_u, gradient_bound_check, hjb_residual, solve_dirichlet, solve_ergodic
from .fokker_planck import flux_w, fp_weak_residual, solve_invariant
from .potential import (
    PotentialSpec,
    Well,
    check_assumptions,
    eval_potential,
    load_tabulated,
    multiwell_potential,
    polynomial_potential,
    potential_field,
    well_table,
    zero_potential,
)
from .solution_io import load_solution, save_solution

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
