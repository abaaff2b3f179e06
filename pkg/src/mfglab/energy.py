"""Variational objects for density-flux pairs: kinetic term, full energy,
mollified energy, and the Gagliardo-Nirenberg ratio.

Conventions: the kinetic integrand C_L |w|^r m^(1-r) uses the 0-convention at
(m, w) = (0, 0) and is +inf wherever w != 0 but m = 0 (infeasible pair).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import ConfigurationError, DegeneratePairError
from .grid import Grid, ScalarField, VectorField, integrate
from .hamiltonian import HamiltonianSpec


@dataclass(frozen=True)
class FlowPair:
    """Nonnegative density m with its flux w; the minimization variable."""

    m: ScalarField
    w: VectorField

    def __post_init__(self):
        if self.m.grid is not self.w.grid and self.m.grid != self.w.grid:
            raise ConfigurationError("m and w must live on the same grid")
        if float(self.m.values.min()) < 0.0:
            raise ConfigurationError("density must be nonnegative")
        if not (self.mass > 0.0):
            raise ConfigurationError("density must carry positive mass")

    @property
    def grid(self) -> Grid:
        return self.m.grid

    @property
    def mass(self) -> float:
        return integrate(self.m)


def kinetic(pair: FlowPair, ham: HamiltonianSpec) -> float:
    """C_L int |w/m|^r m, +inf when the pair is infeasible."""
    mv = pair.m.values
    wmag = pair.w.magnitude()
    moving = wmag > 0.0
    if np.any(mv[moving] <= 0.0):
        return float("inf")
    integrand = np.zeros_like(mv)
    integrand[moving] = ham.c_l * wmag[moving] ** ham.r * mv[moving] ** (1.0 - ham.r)
    return integrate(integrand, pair.grid)


def coupling_integral(m: ScalarField, alpha: float) -> float:
    """int m^(alpha+1)."""
    return integrate(m.values ** (alpha + 1.0), m.grid)


def total_energy(
    pair: FlowPair, V: ScalarField | None, alpha: float, ham: HamiltonianSpec
) -> float:
    if not (alpha > 0):
        raise ConfigurationError("alpha must be positive")
    kin = kinetic(pair, ham)
    if not np.isfinite(kin):
        return kin
    pot = integrate(V.values * pair.m.values, pair.grid) if V is not None else 0.0
    return kin + pot - coupling_integral(pair.m, alpha) / (alpha + 1.0)


def gn_ratio(pair: FlowPair, alpha: float, ham: HamiltonianSpec) -> float:
    """(kinetic)^(n alpha / r) mass^(((alpha+1) r - n alpha)/r) / int m^(alpha+1).

    Invariant under (m, w) -> (t^n m(tx), t^(n+1) w(tx)) and under positive
    scalar multiples of the pair.
    """
    kin = kinetic(pair, ham)
    if not (np.isfinite(kin) and kin > 0.0):
        raise DegeneratePairError("kinetic term must be finite and positive")
    denom = coupling_integral(pair.m, alpha)
    if denom <= 0.0:
        raise DegeneratePairError("coupling integral vanishes")
    n = pair.grid.dim
    r = ham.r
    return kin ** (n * alpha / r) * pair.mass ** (((alpha + 1.0) * r - n * alpha) / r) / denom


def mollifier_kernel(grid: Grid, radius: float) -> np.ndarray:
    """Compact polynomial bump (1 - |x/eps|^2)^2 sampled on the stencil, sum 1."""
    h = grid.spacing
    if radius < 2.0 * h:
        raise ConfigurationError("mollifier radius must be at least 2 grid spacings")
    k = int(np.floor(radius / h))
    offs = np.arange(-k, k + 1) * h
    if grid.dim == 1:
        rho2 = (offs / radius) ** 2
    else:
        ox, oy = np.meshgrid(offs, offs, indexing="ij")
        rho2 = (ox**2 + oy**2) / radius**2
    ker = np.where(rho2 < 1.0, (1.0 - rho2) ** 2, 0.0)
    return ker / ker.sum()


def mollify(m: ScalarField, radius: float, periodic: bool = False) -> ScalarField:
    ker = mollifier_kernel(m.grid, radius)
    mode = "wrap" if periodic else "constant"
    sm = ndimage.convolve(m.values, ker, mode=mode, cval=0.0)
    return ScalarField(m.grid, sm)


def mollified_energy(
    pair: FlowPair,
    V: ScalarField | None,
    alpha: float,
    moll_radius: float,
    ham: HamiltonianSpec,
    periodic: bool = False,
) -> float:
    """total_energy with the coupling evaluated on the mollified density."""
    kin = kinetic(pair, ham)
    if not np.isfinite(kin):
        return kin
    pot = integrate(V.values * pair.m.values, pair.grid) if V is not None else 0.0
    smooth = mollify(pair.m, moll_radius, periodic=periodic)
    return kin + pot - coupling_integral(smooth, alpha) / (alpha + 1.0)


def gn_inequality_slack(pair: FlowPair, ham: HamiltonianSpec, m_star: float) -> float:
    """RHS - LHS of the sharp mass-critical inequality
    int m^(1+r/n) <= (1+r/n) (M*)^(-r/n) * kinetic * mass^(r/n);
    nonnegative for every constraint-satisfying pair when M* is correct."""
    n = pair.grid.dim
    r = ham.r
    alpha = r / n
    kin = kinetic(pair, ham)
    rhs = (1.0 + alpha) * m_star ** (-alpha) * kin * pair.mass**alpha
    lhs = coupling_integral(pair.m, alpha)
    return rhs - lhs


def _resample(values: np.ndarray, grid: Grid, t: float) -> np.ndarray:
    """values(t * x) sampled on the same grid, zero outside the box."""
    ax = grid.axis()
    pts = t * ax
    if grid.dim == 1:
        out = np.interp(pts, ax, values, left=0.0, right=0.0)
        out[np.abs(pts) > grid.half_width] = 0.0
        return out
    from scipy.interpolate import RegularGridInterpolator

    interp = RegularGridInterpolator((ax, ax), values, bounds_error=False, fill_value=0.0)
    gx, gy = np.meshgrid(pts, pts, indexing="ij")
    return interp(np.stack([gx.ravel(), gy.ravel()], axis=-1)).reshape(grid.shape)


def scale_pair(pair: FlowPair, t: float, amplitude: float = 1.0) -> FlowPair:
    """(a t^n m(tx), a t^(n+1) w(tx)) by interpolation on the pair's grid.

    The t-scaling preserves mass exactly in the continuum; amplitude rescales
    the total mass by a.
    """
    if t <= 0 or amplitude <= 0:
        raise ConfigurationError("scaling parameters must be positive")
    g = pair.grid
    n = g.dim
    mvals = amplitude * t**n * _resample(pair.m.values, g, t)
    mvals = np.maximum(mvals, 0.0)
    wvals = np.stack(
        [amplitude * t ** (n + 1) * _resample(pair.w.values[ax], g, t) for ax in range(n)]
    )
    # keep the feasibility convention: no flux where the density vanished
    wvals[:, mvals == 0.0] = 0.0
    return FlowPair(ScalarField(g, mvals), VectorField(g, wvals))
