"""Empirical probes of interior regularity: Morrey-type ball statistics of the
gradient for solutions of -Lap u + C_H |grad u|^r' = f with unit-L^p data.

Discrete balls are max-norm balls (axis-aligned boxes), so every ball average
reduces to an integral-image box sum and the statistics are exact and cheap.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import ConfigurationError
from .grid import Grid, ScalarField, lp_norm
from .hamiltonian import HamiltonianSpec
from .operators import scheme_gradient


def dyadic_radii(grid: Grid, smallest_factor: float = 8.0) -> tuple[float, ...]:
    """L/4, L/8, ... down to smallest_factor * h."""
    out = []
    R = grid.half_width / 4.0
    while R >= smallest_factor * grid.spacing:
        out.append(R)
        R *= 0.5
    if not out:
        raise ConfigurationError("grid too coarse for any probe radius")
    return tuple(out)


@dataclass(frozen=True)
class MorreyParams:
    rprime: float
    s: float
    radii: tuple[float, ...]
    center_stride: int = 4

    def __post_init__(self):
        if not all(r > 0 for r in self.radii):
            raise ConfigurationError("radii must be positive")


@dataclass(frozen=True)
class ProbeStat:
    exponent: float
    sup: float
    values: tuple[tuple[tuple[int, ...], float, float], ...]  # (center idx, R, value)
    skipped: int = 0


class _BoxSums:
    """Inclusive box sums over node windows via summed-area tables."""

    def __init__(self, grid: Grid, values: np.ndarray):
        self.grid = grid
        pad = [(1, 0)] * grid.dim
        table = np.pad(values, pad)
        for ax in range(grid.dim):
            table = np.cumsum(table, axis=ax)
        self.table = table

    def window_sum(self, lo: tuple[int, ...], hi: tuple[int, ...]) -> float:
        t = self.table
        if self.grid.dim == 1:
            return float(t[hi[0] + 1] - t[lo[0]])
        i0, j0 = lo
        i1, j1 = hi
        return float(t[i1 + 1, j1 + 1] - t[i0, j1 + 1] - t[i1 + 1, j0] + t[i0, j0])


def _centers(grid: Grid, stride: int) -> list[tuple[int, ...]]:
    idx = range(0, grid.points_per_axis, stride)
    if grid.dim == 1:
        return [(i,) for i in idx]
    return [(i, j) for i in idx for j in idx]


def _ball_window(grid: Grid, center: tuple[int, ...], radius: float, clip: bool):
    k = int(np.floor(radius / grid.spacing + 1e-12))
    lo = tuple(c - k for c in center)
    hi = tuple(c + k for c in center)
    n = grid.points_per_axis
    if clip:
        lo = tuple(max(0, v) for v in lo)
        hi = tuple(min(n - 1, v) for v in hi)
        return lo, hi
    if any(v < 0 for v in lo) or any(v > n - 1 for v in hi):
        return None
    return lo, hi


def morrey_norm(field: ScalarField, params: MorreyParams) -> ProbeStat:
    """(sup over centers x radii of R^s * ball average of |field|^r')^(1/r').

    Balls are intersected with the box; windows averaging fewer than 4 nodes
    are skipped (counted in the report)."""
    grid = field.grid
    if not (0.0 <= params.s <= grid.dim):
        raise ConfigurationError("Morrey exponent s must lie in [0, dim]")
    power = np.abs(field.values) ** params.rprime
    sums = _BoxSums(grid, power)
    counts = _BoxSums(grid, np.ones(grid.shape))
    best = 0.0
    values = []
    skipped = 0
    for c in _centers(grid, params.center_stride):
        for R in params.radii:
            win = _ball_window(grid, c, R, clip=True)
            lo, hi = win
            cnt = counts.window_sum(lo, hi)
            if cnt < 4:
                skipped += 1
                continue
            avg = sums.window_sum(lo, hi) / cnt
            val = R**params.s * avg
            values.append((c, R, val))
            best = max(best, val)
    return ProbeStat(
        exponent=params.s,
        sup=best ** (1.0 / params.rprime),
        values=tuple(values),
        skipped=skipped,
    )


def _gradient_power(u: ScalarField, ham: HamiltonianSpec) -> np.ndarray:
    p = scheme_gradient(u.values, u.grid, "centered")
    return np.sum(p**2, axis=0) ** (ham.rprime / 2.0)


def harnack_stat(
    u: ScalarField,
    ham: HamiltonianSpec,
    p: float,
    radii: tuple[float, ...] | None = None,
    center_stride: int = 4,
) -> ProbeStat:
    """K(R) = int_{B_{R/2}} |grad u|^r' dx / R^(n - rhat), rhat = max(n/p, r),
    over balls with B_R inside the box; sup over dyadic radii and centers."""
    grid = u.grid
    n = grid.dim
    rhat = max(n / p, ham.r)
    radii = radii if radii is not None else dyadic_radii(grid)
    gp = _gradient_power(u, ham)
    sums = _BoxSums(grid, gp)
    hn = grid.spacing**n
    best = 0.0
    values = []
    skipped = 0
    for c in _centers(grid, center_stride):
        for R in radii:
            if _ball_window(grid, c, R, clip=False) is None:
                skipped += 1
                continue
            win = _ball_window(grid, c, R / 2.0, clip=False)
            if win is None:
                skipped += 1
                continue
            lo, hi = win
            integral = hn * sums.window_sum(lo, hi)
            val = integral / R ** (n - rhat)
            values.append((c, R, val))
            best = max(best, val)
    return ProbeStat(exponent=rhat, sup=best, values=tuple(values), skipped=skipped)


def weighted_morrey_stat(
    u: ScalarField,
    ham: HamiltonianSpec,
    p: float,
    q: float | None = None,
    margin: float = 0.25,
    radii: tuple[float, ...] | None = None,
    center_stride: int = 4,
) -> ProbeStat:
    """sup over (center, R) with B_2R in the interior box of
    R^q * avg_{B_R} |grad u|^r' * dist(B_R, boundary)^(r - q),
    with q = r'(n/p - 1) for p < n and user-chosen q in (0, r) otherwise."""
    grid = u.grid
    n = grid.dim
    r = ham.r
    if ham.rprime < n / max(n - 1, 1e-12) or n < 2:
        raise ConfigurationError("weighted probe needs dim >= 2 and r' >= n/(n-1)")
    if not (p > n / r):
        raise ConfigurationError(f"p must exceed n/r = {n / r}")
    if p < n:
        q_eff = ham.rprime * (n / p - 1.0)
    else:
        if q is None or not (0.0 < q < r):
            raise ConfigurationError("for p >= n choose q in (0, r)")
        q_eff = q
    if not (0.0 < q_eff <= n):
        raise ConfigurationError(f"weighted exponent q = {q_eff} outside (0, n]")

    radii = radii if radii is not None else dyadic_radii(grid)
    gp = _gradient_power(u, ham)
    sums = _BoxSums(grid, gp)
    counts = _BoxSums(grid, np.ones(grid.shape))
    L = grid.half_width
    inner = (1.0 - margin) * L
    ax = grid.axis()
    best = 0.0
    values = []
    skipped = 0
    for c in _centers(grid, center_stride):
        coords = np.array([ax[i] for i in c])
        if np.max(np.abs(coords)) > inner:
            continue
        for R in radii:
            if np.max(np.abs(coords)) + 2.0 * R > L:
                skipped += 1
                continue
            win = _ball_window(grid, c, R, clip=False)
            if win is None:
                skipped += 1
                continue
            lo, hi = win
            cnt = counts.window_sum(lo, hi)
            avg = sums.window_sum(lo, hi) / cnt
            dist = (L - np.max(np.abs(coords))) - R
            val = R**q_eff * avg * dist ** (r - q_eff)
            values.append((c, R, val))
            best = max(best, val)
    return ProbeStat(exponent=q_eff, sup=best, values=tuple(values), skipped=skipped)


def sample_rhs_family(grid: Grid, p: float, count: int, seed: int) -> list[ScalarField]:
    """Deterministic pseudo-random data, each member rescaled to unit L^p norm.

    Generator: a bandlimited Gaussian random field written as a fixed random
    cosine-feature sum (so the same seed describes the same continuum
    function on every grid) plus a few random Gaussian bumps.
    """
    rng = np.random.default_rng(seed)
    out = []
    coords = grid.coords()
    L = grid.half_width
    n_features = 64
    for _ in range(count):
        omegas = rng.normal(0.0, 3.0 / L, size=(n_features, grid.dim))
        phases = rng.uniform(0.0, 2.0 * np.pi, size=n_features)
        amps = rng.normal(0.0, 1.0, size=n_features) / np.sqrt(n_features)
        f = np.zeros(grid.shape)
        for k in range(n_features):
            phase = sum(omegas[k, ax] * coords[ax] for ax in range(grid.dim)) + phases[k]
            f = f + amps[k] * np.cos(phase)
        for _ in range(int(rng.integers(1, 4))):
            center = rng.uniform(-0.6 * L, 0.6 * L, size=grid.dim)
            width = rng.uniform(0.08, 0.3) * L
            amp = rng.normal(0.0, 1.0)
            rho2 = sum((x - c) ** 2 for x, c in zip(coords, center)) / width**2
            f = f + amp * np.exp(-0.5 * rho2)
        norm = lp_norm(f, p, grid)
        if norm == 0.0:
            f = f + 1.0
            norm = lp_norm(f, p, grid)
        out.append(ScalarField(grid, f / norm))
    return out
