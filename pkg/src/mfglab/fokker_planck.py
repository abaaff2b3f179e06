"""Invariant density of Lap m + div(m b) = 0 with prescribed total mass.

The discrete operator is the structural transpose of the drift-frozen HJB
linearization, so the adjoint pairing <A u, m> = <u, A^T m> is exact and the
flat node sum of m is conserved by construction.  The kernel vector is found
by regularized inverse power iteration.
"""
from __future__ import annotations

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import DegenerateDriftError, NumericsError, SchemeError
from .grid import Grid, ScalarField, VectorField, integrate
from .hamiltonian import HamiltonianSpec, h_grad
from .hjb import ErgodicSolution
from .operators import assemble_generator, scheme_gradient

NEGATIVITY_LIMIT = 1e-14  # relative to max m, before clipping
CLIP_THRESHOLD = 1e-16


def invariant_operator(
    grid: Grid, drift: np.ndarray, advection: str = "centered", periodic: bool = False
) -> sp.csr_matrix:
    """Transpose of -Lap + b.grad, i.e. the discrete m -> -Lap m - div(m b)."""
    return assemble_generator(grid, drift, advection=advection, periodic=periodic).T.tocsr()


def solve_invariant(
    grid: Grid,
    drift: VectorField | np.ndarray,
    mass: float,
    advection: str = "centered",
    periodic: bool = False,
    regularization: float = 1e-12,
    max_power_iterations: int = 50,
    kernel_tol: float = 1e-13,
    check_kernel: bool = True,
) -> ScalarField:
    if not (mass > 0):
        raise ValueError("mass must be positive")
    bvals = drift.values if isinstance(drift, VectorField) else np.asarray(drift, dtype=float)
    B = invariant_operator(grid, bvals, advection=advection, periodic=periodic)
    n = grid.num_nodes
    lu = spla.splu((B + regularization * sp.identity(n, format="csr")).tocsc())

    def iterate(start: np.ndarray) -> np.ndarray:
        x = start / np.sum(np.abs(start))
        for _ in range(max_power_iterations):
            x = lu.solve(x)
            norm = np.sum(np.abs(x))
            if not np.isfinite(norm) or norm == 0.0:
                raise NumericsError("inverse power iteration broke down")
            x = x / norm
            res = np.max(np.abs(B @ x)) / np.max(np.abs(x))
            if res <= kernel_tol:
                break
        return x

    x = iterate(np.ones(n))
    if check_kernel:
        x2 = iterate(1.0 + np.linspace(0.0, 1.0, n))
        drift_gap = np.max(np.abs(x - x2)) / np.max(np.abs(x))
        if drift_gap > 1e-8:
            raise DegenerateDriftError(
                f"invariant-measure kernel is not one-dimensional (gap {drift_gap:.2e})"
            )

    # Perron vector of an M-matrix inverse stays positive; anything below the
    # roundoff band signals a broken scheme, not noise.
    y = x / np.max(x)
    if np.min(y) < -NEGATIVITY_LIMIT:
        raise SchemeError(
            f"invariant density has negative entries beyond roundoff (min {np.min(y):.2e})"
        )
    y = np.where(y < CLIP_THRESHOLD, np.maximum(y, 0.0), y)
    y[y < 0.0] = 0.0

    m = y.reshape(grid.shape)
    total = integrate(m, grid)
    if total <= 0:
        raise NumericsError("invariant density has nonpositive mass before rescaling")
    m = m * (mass / total)
    return ScalarField(grid, m)


def flux_w(m: ScalarField, sol: ErgodicSolution, ham: HamiltonianSpec) -> VectorField:
    """w = -C_H r' m |grad u|^(r'-2) grad u with the solver's discrete gradient."""
    p = scheme_gradient(sol.u.values, sol.grid, sol.scheme)
    return VectorField(m.grid, -m.values * h_grad(p, ham))


def default_test_functions(grid: Grid, margin: float = 0.2) -> list[ScalarField]:
    """Deterministic compactly-supported bumps strictly inside the box."""
    L = grid.half_width
    centers_1d = (-0.4 * L, 0.0, 0.35 * L)
    widths = (0.35 * L * (1 - margin), 0.18 * L)
    out = []
    coords = grid.coords()
    for w in widths:
        for c in centers_1d:
            rho2 = sum((x - c) ** 2 for x in coords) / w**2
            vals = np.where(rho2 < 1.0, (1.0 - rho2) ** 3, 0.0)
            if np.any(vals > 0):
                out.append(ScalarField(grid, vals))
    return out


def fp_weak_residual(
    m: ScalarField,
    w: VectorField,
    test_functions: list[ScalarField] | None = None,
) -> float:
    """max over tests of |int grad m . grad phi - int w . grad phi| / ||grad phi||_2."""
    grid = m.grid
    tests = test_functions if test_functions is not None else default_test_functions(grid)
    gm = scheme_gradient(m.values, grid, "centered")
    weights = grid.trapezoid_weights()
    worst = 0.0
    for phi in tests:
        gphi = scheme_gradient(phi.values, grid, "centered")
        lhs = float(np.sum(weights * np.sum(gm * gphi, axis=0)))
        rhs = float(np.sum(weights * np.sum(w.values * gphi, axis=0)))
        norm = float(np.sqrt(np.sum(weights * np.sum(gphi**2, axis=0))))
        if norm == 0.0:
            continue
        worst = max(worst, abs(lhs - rhs) / norm)
    return worst
