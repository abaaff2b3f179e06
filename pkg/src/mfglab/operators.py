"""Finite-difference building blocks shared by the HJB and Fokker-Planck solvers.

All operators act on flattened C-order node vectors.  Boundary rows use the
reflected (ghost-mirror) second difference for the normal diffusion plus the
one available one-sided difference for advection: every row annihilates
constants, stays monotone, and the transpose closes the Fokker-Planck side
with a no-flux boundary.
"""
from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .grid import Grid

GRADIENT_SCHEMES = ("centered", "godunov")


def scheme_gradient(u: np.ndarray, grid: Grid, scheme: str) -> np.ndarray:
    """Discrete gradient, component axis first.

    centered: second-order interior differences, one-sided at the edges.
    godunov:  per axis max(backward, 0) + min(forward, 0); only the inward
              one-sided difference survives at an edge.  Degenerate-elliptic
              when fed to a convex Hamiltonian of |p|.
    """
    if scheme not in GRADIENT_SCHEMES:
        raise ValueError(f"unknown gradient scheme {scheme!r}")
    u = np.asarray(u, dtype=np.float64)
    h = grid.spacing
    out = np.empty((grid.dim,) + grid.shape)
    for ax in range(grid.dim):
        fwd = (np.roll(u, -1, axis=ax) - u) / h
        bwd = (u - np.roll(u, 1, axis=ax)) / h
        first = [slice(None)] * grid.dim
        last = [slice(None)] * grid.dim
        first[ax] = 0
        last[ax] = grid.points_per_axis - 1
        if scheme == "centered":
            g = 0.5 * (fwd + bwd)
            g[tuple(first)] = fwd[tuple(first)]
            g[tuple(last)] = bwd[tuple(last)]
        else:
            g = np.maximum(bwd, 0.0) + np.minimum(fwd, 0.0)
            g[tuple(first)] = np.minimum(fwd[tuple(first)], 0.0)
            g[tuple(last)] = np.maximum(bwd[tuple(last)], 0.0)
        out[ax] = g
    return out


def laplacian_apply(u: np.ndarray, grid: Grid) -> np.ndarray:
    """Second differences summed over axes; mirror ghost values at edge nodes."""
    u = np.asarray(u, dtype=np.float64)
    h2 = grid.spacing**2
    out = np.zeros(grid.shape)
    for ax in range(grid.dim):
        second = (np.roll(u, -1, axis=ax) - 2.0 * u + np.roll(u, 1, axis=ax)) / h2
        first = [slice(None)] * grid.dim
        last = [slice(None)] * grid.dim
        second_row = [slice(None)] * grid.dim
        penult_row = [slice(None)] * grid.dim
        first[ax] = 0
        last[ax] = grid.points_per_axis - 1
        second_row[ax] = 1
        penult_row[ax] = grid.points_per_axis - 2
        second[tuple(first)] = 2.0 * (u[tuple(second_row)] - u[tuple(first)]) / h2
        second[tuple(last)] = 2.0 * (u[tuple(penult_row)] - u[tuple(last)]) / h2
        out += second
    return out


def _axis_neighbors(grid: Grid):
    idx = np.arange(grid.num_nodes).reshape(grid.shape)
    for ax in range(grid.dim):
        yield ax, idx, np.roll(idx, -1, axis=ax), np.roll(idx, 1, axis=ax)


def assemble_generator(
    grid: Grid,
    drift: np.ndarray,
    advection: str = "centered",
    periodic: bool = False,
) -> sp.csr_matrix:
    """Sparse matrix for -Lap u + b . grad u with node-wise drift b.

    advection 'centered' uses second-order interior differences; 'upwind'
    selects the one-sided difference by the sign of b (M-matrix for any b).
    With periodic=True every node is treated as interior with wrap-around
    neighbors (test closure; no boundary rows).
    """
    if advection not in ("centered", "upwind"):
        raise ValueError(f"unknown advection scheme {advection!r}")
    drift = np.asarray(drift, dtype=np.float64).reshape((grid.dim,) + grid.shape)
    h = grid.spacing
    h2 = h * h
    rows, cols, vals = [], [], []

    def add(r, c, v):
        rows.append(np.asarray(r).ravel())
        cols.append(np.asarray(c).ravel())
        vals.append(np.broadcast_to(v, np.asarray(r).shape).ravel().astype(np.float64))

    for ax, idx, ip, im in _axis_neighbors(grid):
        b = drift[ax]
        if periodic:
            interior = np.ones(grid.shape, dtype=bool)
            left = right = np.zeros(grid.shape, dtype=bool)
        else:
            left = np.zeros(grid.shape, dtype=bool)
            right = np.zeros(grid.shape, dtype=bool)
            sl = [slice(None)] * grid.dim
            sl[ax] = 0
            left[tuple(sl)] = True
            sl[ax] = grid.points_per_axis - 1
            right[tuple(sl)] = True
            interior = ~(left | right)

        add(idx[interior], idx[interior], 2.0 / h2)
        add(idx[interior], ip[interior], -1.0 / h2)
        add(idx[interior], im[interior], -1.0 / h2)

        if advection == "centered":
            coef = b[interior] / (2.0 * h)
            add(idx[interior], ip[interior], coef)
            add(idx[interior], im[interior], -coef)
        else:
            bp = np.maximum(b[interior], 0.0) / h
            bm = np.minimum(b[interior], 0.0) / h
            add(idx[interior], idx[interior], bp - bm)
            add(idx[interior], im[interior], -bp)
            add(idx[interior], ip[interior], bm)

        if not periodic:
            for mask, nb, sign in ((left, ip, 1.0), (right, im, -1.0)):
                if not np.any(mask):
                    continue
                # mirror-ghost diffusion: -(2 u_nb - 2 u_0)/h^2
                add(idx[mask], idx[mask], 2.0 / h2)
                add(idx[mask], nb[mask], -2.0 / h2)
                coef = sign * b[mask] / h
                add(idx[mask], nb[mask], coef)
                add(idx[mask], idx[mask], -coef)

    n = grid.num_nodes
    mat = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n)
    )
    return mat.tocsr()


def assemble_dirichlet_operator(grid: Grid, drift: np.ndarray, advection: str = "centered") -> tuple[sp.csr_matrix, np.ndarray]:
    """Same generator but with identity rows on the box boundary (u = 0 there).

    Returns the matrix and the boolean boundary mask (flattened order).
    """
    A = assemble_generator(grid, drift, advection=advection).tolil()
    mask = boundary_mask(grid)
    flat = np.flatnonzero(mask.ravel())
    for i in flat:
        A.rows[i] = [i]
        A.data[i] = [1.0]
    return A.tocsr(), mask


def boundary_mask(grid: Grid) -> np.ndarray:
    mask = np.zeros(grid.shape, dtype=bool)
    for ax in range(grid.dim):
        sl = [slice(None)] * grid.dim
        sl[ax] = 0
        mask[tuple(sl)] = True
        sl[ax] = grid.points_per_axis - 1
        mask[tuple(sl)] = True
    return mask
