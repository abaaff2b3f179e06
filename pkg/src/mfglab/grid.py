"""Uniform tensor grids on [-L, L]^dim, discrete fields, trapezoidal quadrature."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import ConfigurationError

MIN_POINTS = 16


@dataclass(frozen=True)
class Grid:
    """Uniform tensor-product grid with N nodes per axis covering [-L, L]^dim."""

    dim: int
    half_width: float
    points_per_axis: int

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ConfigurationError(f"dim must be 1 or 2, got {self.dim}")
        if self.points_per_axis < MIN_POINTS:
            raise ConfigurationError(
                f"points_per_axis must be >= {MIN_POINTS}, got {self.points_per_axis}"
            )
        if not (self.half_width > 0):
            raise ConfigurationError(f"half_width must be positive, got {self.half_width}")

    @property
    def spacing(self) -> float:
        # exact rational arithmetic of 2L/(N-1) before the float cast
        return float(2 * Fraction(self.half_width) / (self.points_per_axis - 1))

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.points_per_axis,) * self.dim

    @property
    def num_nodes(self) -> int:
        return self.points_per_axis**self.dim

    def axis(self) -> np.ndarray:
        return np.linspace(-self.half_width, self.half_width, self.points_per_axis)

    def coords(self) -> list[np.ndarray]:
        """Per-axis coordinate arrays broadcast to the full grid shape."""
        ax = self.axis()
        if self.dim == 1:
            return [ax]
        return list(np.meshgrid(ax, ax, indexing="ij"))

    def radius(self) -> np.ndarray:
        """Euclidean |x| at every node."""
        c = self.coords()
        return np.sqrt(sum(ci**2 for ci in c))

    def trapezoid_weights(self) -> np.ndarray:
        w1 = np.full(self.points_per_axis, self.spacing)
        w1[0] *= 0.5
        w1[-1] *= 0.5
        if self.dim == 1:
            return w1
        return np.outer(w1, w1)


def make_grid(dim: int, half_width: float, points_per_axis: int) -> Grid:
    return Grid(dim=dim, half_width=float(half_width), points_per_axis=int(points_per_axis))


def _frozen(values: np.ndarray) -> np.ndarray:
    # always copy so freezing never reaches back into the caller's buffer
    out = np.array(values, dtype=np.float64, order="C", copy=True)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class ScalarField:
    """One real value per node; immutable after construction."""

    grid: Grid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.shape != self.grid.shape:
            raise ConfigurationError(
                f"field shape {vals.shape} does not match grid shape {self.grid.shape}"
            )
        if not np.all(np.isfinite(vals)):
            raise ConfigurationError("field contains non-finite values")
        object.__setattr__(self, "values", _frozen(vals))

    @classmethod
    def from_function(cls, grid: Grid, fn) -> "ScalarField":
        return cls(grid, fn(*grid.coords()))

    @classmethod
    def constant(cls, grid: Grid, value: float) -> "ScalarField":
        return cls(grid, np.full(grid.shape, float(value)))


@dataclass(frozen=True)
class VectorField:
    """dim real values per node, component axis first; immutable."""

    grid: Grid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.shape != (self.grid.dim,) + self.grid.shape:
            raise ConfigurationError(
                f"vector field shape {vals.shape} does not match "
                f"expected {(self.grid.dim,) + self.grid.shape}"
            )
        if not np.all(np.isfinite(vals)):
            raise ConfigurationError("vector field contains non-finite values")
        object.__setattr__(self, "values", _frozen(vals))

    def magnitude(self) -> np.ndarray:
        return np.sqrt(np.sum(self.values**2, axis=0))


def integrate(f: ScalarField | np.ndarray, grid: Grid | None = None) -> float:
    """Composite trapezoidal quadrature over the whole box."""
    if isinstance(f, ScalarField):
        grid = f.grid
        vals = f.values
    else:
        if grid is None:
            raise ConfigurationError("integrate() of a raw array needs a grid")
        vals = np.asarray(f, dtype=np.float64)
    return float(np.sum(grid.trapezoid_weights() * vals))


def lp_norm(f: ScalarField | np.ndarray, p: float, grid: Grid | None = None) -> float:
    """Discrete L^p norm with trapezoid weights."""
    if isinstance(f, ScalarField):
        grid, vals = f.grid, f.values
    else:
        vals = np.asarray(f, dtype=np.float64)
    return float(np.sum(grid.trapezoid_weights() * np.abs(vals) ** p) ** (1.0 / p))
