"""Ergodic Hamilton-Jacobi-Bellman solver: -Lap u + C_H |grad u|^r' + lam = g.

The pair (u, lam) is found by policy iteration: freeze the drift
b = grad H(grad u), solve the linear advection-diffusion problem with the
ergodic constant as an extra unknown closed by u(argmin) = 0, then update the
drift.  The policy step is the exact (semismooth) Newton step of the chosen
gradient discretization, damped when the residual grows.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import NumericsError, SolverDivergedError
from .grid import Grid, ScalarField, VectorField
from .hamiltonian import HamiltonianSpec, h_grad, lagrangian
from .operators import (
    assemble_dirichlet_operator,
    assemble_generator,
    boundary_mask,
    laplacian_apply,
    scheme_gradient,
)


@dataclass(frozen=True)
class ErgodicSolution:
    """Value function with min u = 0 plus the ergodic constant."""

    u: ScalarField
    ergodic_constant: float
    residual_norm: float
    iterations: int
    scheme: str

    @property
    def grid(self) -> Grid:
        return self.u.grid


def _advection_for(scheme: str) -> str:
    return "upwind" if scheme == "godunov" else "centered"


def _nonlinear_residual(u, lam, g, grid, ham, scheme):
    p = scheme_gradient(u, grid, scheme)
    hterm = ham.c_h * np.sum(p**2, axis=0) ** (ham.rprime / 2.0)
    return -laplacian_apply(u, grid) + hterm + lam - g


def _interior_sup(field, grid):
    mask = ~boundary_mask(grid)
    return float(np.max(np.abs(field[mask])))


def _solve_linear_ergodic(A: sp.csr_matrix, rhs: np.ndarray, i0: int, u_prev: np.ndarray, lam_prev: float):
    """One exact step of A u + lam = rhs with u[i0] = 0, taken in update form
    (delta = u - u_prev) so the linear-algebra noise scales with the residual
    rather than with the solution."""
    n = A.shape[0]
    B = A.tolil()
    B.rows[i0] = [i0]
    B.data[i0] = [1.0]
    B = B.tocsc()
    lu = spla.splu(B)
    resid = rhs - (A @ u_prev + lam_prev)
    f = resid.copy()
    f[i0] = -u_prev[i0]
    ones = np.ones(n)
    ones[i0] = 0.0
    d0 = lu.solve(f)
    d1 = lu.solve(ones)
    row = A.getrow(i0)
    num = resid[i0] - row.dot(d0)[0]
    den = 1.0 - row.dot(d1)[0]
    dlam = float(num / den)
    delta = d0 - dlam * d1
    delta[i0] = -u_prev[i0]
    return u_prev + delta, lam_prev + dlam


def solve_ergodic(
    grid: Grid,
    g: ScalarField,
    ham: HamiltonianSpec,
    tol: float = 1e-8,
    max_iter: int = 100,
    scheme: str = "centered",
    damping: float = 0.5,
    u_init: np.ndarray | None = None,
) -> ErgodicSolution:
    gv = g.values
    u = np.zeros(grid.shape) if u_init is None else np.array(u_init, dtype=float)
    lam = float(gv.min())
    b_prev = np.zeros((grid.dim,) + grid.shape)
    res_prev = np.inf
    theta = 1.0
    history = []
    advection = _advection_for(scheme)

    for it in range(1, max_iter + 1):
        p = scheme_gradient(u, grid, scheme)
        b_new = h_grad(p, ham)
        b = theta * b_new + (1.0 - theta) * b_prev
        A = assemble_generator(grid, b, advection=advection)
        rhs = (gv + lagrangian(b, ham)).ravel()
        i0 = int(np.argmin(u.ravel()))
        u_flat, lam = _solve_linear_ergodic(A, rhs, i0, u.ravel(), lam)
        u = u_flat.reshape(grid.shape)
        if not np.all(np.isfinite(u)) or not np.isfinite(lam):
            raise NumericsError("HJB policy iteration produced non-finite values")
        res_field = _nonlinear_residual(u, lam, gv, grid, ham, scheme)
        res = _interior_sup(res_field, grid)
        history.append(res)
        if res <= tol:
            u = u - u.min()
            return ErgodicSolution(
                u=ScalarField(grid, u),
                ergodic_constant=lam,
                residual_norm=res,
                iterations=it,
                scheme=scheme,
            )
        if res > res_prev:
            theta = max(damping * theta, 1e-3)
        else:
            theta = min(1.0, 1.25 * theta)
        b_prev = b
        res_prev = res

    raise SolverDivergedError(
        f"ergodic HJB solve did not reach tol={tol} in {max_iter} iterations "
        f"(last residual {history[-1]:.3e})",
        residual=history[-1],
        history=history,
    )


def hjb_residual(sol: ErgodicSolution, g: ScalarField, ham: HamiltonianSpec) -> ScalarField:
    """Pointwise residual with the exact operators the solver used."""
    res = _nonlinear_residual(
        sol.u.values, sol.ergodic_constant, g.values, sol.grid, ham, sol.scheme
    )
    return ScalarField(sol.grid, res)


def drift_from_u(sol: ErgodicSolution, ham: HamiltonianSpec) -> VectorField:
    """grad H at the solver's discrete gradient, so the FP pairing is exact."""
    p = scheme_gradient(sol.u.values, sol.grid, sol.scheme)
    return VectorField(sol.grid, h_grad(p, ham))


@dataclass(frozen=True)
class GradientBoundReport:
    constant: float
    worst_node: tuple
    rprime: float


def gradient_bound_check(sol: ErgodicSolution, V: ScalarField, ham: HamiltonianSpec) -> GradientBoundReport:
    """Smallest C with |grad u| <= C (1 + V)^(1/r') node-wise."""
    p = scheme_gradient(sol.u.values, sol.grid, sol.scheme)
    mag = np.sqrt(np.sum(p**2, axis=0))
    envelope = (1.0 + V.values) ** (1.0 / ham.rprime)
    ratio = mag / envelope
    worst = np.unravel_index(int(np.argmax(ratio)), sol.grid.shape)
    return GradientBoundReport(
        constant=float(ratio.max()), worst_node=tuple(int(i) for i in worst), rprime=ham.rprime
    )


def solve_dirichlet(
    grid: Grid,
    f: ScalarField,
    ham: HamiltonianSpec,
    tol: float = 1e-9,
    max_iter: int = 60,
    scheme: str = "centered",
    damping: float = 0.5,
) -> ErgodicSolution:
    """lam-free interior problem -Lap u + C_H |grad u|^r' = f with u = 0 on the box edge.

    Used by the regularity probes; the solution is reported in the same
    container with ergodic_constant = 0.
    """
    fv = f.values
    mask = boundary_mask(grid)
    u = np.zeros(grid.shape)
    b_prev = np.zeros((grid.dim,) + grid.shape)
    res_prev = np.inf
    theta = 1.0
    advection = _advection_for(scheme)
    history = []

    for it in range(1, max_iter + 1):
        p = scheme_gradient(u, grid, scheme)
        b = theta * h_grad(p, ham) + (1.0 - theta) * b_prev
        A, _ = assemble_dirichlet_operator(grid, b, advection=advection)
        rhs = (fv + lagrangian(b, ham)).ravel()
        rhs[mask.ravel()] = 0.0
        resid = rhs - A @ u.ravel()
        delta = spla.spsolve(A.tocsc(), resid)
        u = (u.ravel() + delta).reshape(grid.shape)
        if not np.all(np.isfinite(u)):
            raise NumericsError("Dirichlet HJB solve produced non-finite values")
        res_field = _nonlinear_residual(u, 0.0, fv, grid, ham, scheme)
        res = _interior_sup(res_field, grid)
        history.append(res)
        if res <= tol:
            return ErgodicSolution(
                u=ScalarField(grid, u - 0.0),
                ergodic_constant=0.0,
                residual_norm=res,
                iterations=it,
                scheme=scheme,
            )
        if res > res_prev:
            theta = max(damping * theta, 1e-3)
        else:
            theta = min(1.0, 1.25 * theta)
        b_prev = b
        res_prev = res

    raise SolverDivergedError(
        f"Dirichlet HJB solve did not reach tol={tol} in {max_iter} iterations",
        residual=history[-1],
        history=history,
    )
