"""Confining potentials: radial powers, blended multi-well families, tabulated data."""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigurationError
from .grid import Grid, ScalarField


@dataclass(frozen=True)
class Well:
    center: tuple[float, ...]
    amplitude: float
    exponent: float

    def __post_init__(self):
        if not (self.amplitude > 0 and self.exponent > 0):
            raise ConfigurationError("well amplitude and exponent must be positive")


@dataclass(frozen=True)
class PotentialSpec:
    """Description of V >= 0 with inf V = 0 attained.

    kinds:
      zero        V = 0 (potential-free runs)
      polynomial  V = |x|^b
      multiwell   local monomials a_i |x - P_i|^q_i inside radius d/2, blended by a
                  C^1 plateau bump into a quadratic background so V stays coercive
      tabulated   node values read from a text table; bilinear between nodes
    """

    kind: str
    b: float | None = None
    wells: tuple[Well, ...] = ()
    radius: float = 1.0
    background: float | None = None
    table: np.ndarray | None = field(default=None, repr=False)
    table_half_width: float | None = None

    def __post_init__(self):
        if self.kind not in ("zero", "polynomial", "multiwell", "tabulated"):
            raise ConfigurationError(f"unknown potential kind {self.kind!r}")
        if self.kind == "polynomial" and not (self.b is not None and self.b > 0):
            raise ConfigurationError("polynomial potential needs positive exponent b")
        if self.kind == "multiwell":
            if not self.wells:
                raise ConfigurationError("multiwell potential needs at least one well")
            if not (self.radius > 0):
                raise ConfigurationError("well radius must be positive")
            pts = [np.asarray(w.center, dtype=float) for w in self.wells]
            for i in range(len(pts)):
                for j in range(i + 1, len(pts)):
                    if np.linalg.norm(pts[i] - pts[j]) <= 2 * self.radius:
                        raise ConfigurationError(
                            "wells must be separated by more than twice the local radius"
                        )
        if self.kind == "tabulated" and self.table is None:
            raise ConfigurationError("tabulated potential needs table values")

    @property
    def background_scale(self) -> float:
        if self.background is not None:
            return self.background
        half = 0.5 * self.radius
        return max(w.amplitude * half ** (w.exponent - 2.0) for w in self.wells)


def zero_potential() -> PotentialSpec:
    return PotentialSpec(kind="zero")


def polynomial_potential(b: float) -> PotentialSpec:
    return PotentialSpec(kind="polynomial", b=float(b))


def multiwell_potential(wells, radius: float, background: float | None = None) -> PotentialSpec:
    ws = tuple(
        w if isinstance(w, Well) else Well(tuple(float(c) for c in w[0]), float(w[1]), float(w[2]))
        for w in wells
    )
    return PotentialSpec(kind="multiwell", wells=ws, radius=float(radius), background=background)


def load_tabulated(path: str | Path, grid: Grid) -> PotentialSpec:
    """Read node values in lexicographic node order; '#' starts a comment line.

    1D rows: x value.  2D rows: x y value.
    """
    rows = []
    for line in Path(path).read_text().splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        rows.append([float(tok) for tok in line.split()])
    want = grid.dim + 1
    if any(len(rw) != want for rw in rows):
        raise ConfigurationError(f"tabulated potential rows must have {want} columns")
    if len(rows) != grid.num_nodes:
        raise ConfigurationError(
            f"tabulated potential has {len(rows)} rows, grid has {grid.num_nodes} nodes"
        )
    vals = np.array([rw[-1] for rw in rows], dtype=float).reshape(grid.shape)
    if np.any(vals < 0):
        raise ConfigurationError("tabulated potential must be nonnegative")
    return PotentialSpec(kind="tabulated", table=vals, table_half_width=grid.half_width)


def _plateau_bump(t: np.ndarray, d: float) -> np.ndarray:
    """C^1 cutoff: 1 on [0, d/2], (1-s^2)^2 taper on [d/2, d], 0 beyond."""
    t = np.asarray(t, dtype=float)
    s = np.clip((2.0 * t - d) / d, 0.0, 1.0)
    return (1.0 - s**2) ** 2


def eval_potential(spec: PotentialSpec, *xs: np.ndarray) -> np.ndarray | float:
    """Evaluate V at coordinates (one array per axis)."""
    xs = tuple(np.asarray(x, dtype=float) for x in xs)
    if spec.kind == "zero":
        out = np.zeros(np.broadcast(*xs).shape) if xs[0].ndim else 0.0
        return out
    if spec.kind == "polynomial":
        rad = np.sqrt(sum(x**2 for x in xs))
        return rad**spec.b
    if spec.kind == "multiwell":
        rad2_min = None
        total_bump = 0.0
        local = 0.0
        for w in spec.wells:
            d2 = sum((x - c) ** 2 for x, c in zip(xs, w.center))
            dist = np.sqrt(d2)
            chi = _plateau_bump(dist, spec.radius)
            local = local + chi * w.amplitude * dist**w.exponent
            total_bump = total_bump + chi
            rad2_min = d2 if rad2_min is None else np.minimum(rad2_min, d2)
        bg = spec.background_scale * rad2_min
        return local + (1.0 - total_bump) * bg
    # tabulated: bilinear interpolation on the table's own uniform grid
    L = spec.table_half_width
    n = spec.table.shape[0]
    h = 2 * L / (n - 1)
    idx = [(np.clip(x, -L, L) + L) / h for x in xs]
    if len(xs) == 1:
        return _interp1(spec.table, idx[0])
    return _interp2(spec.table, idx[0], idx[1])


def _interp1(tab, fi):
    i0 = np.clip(np.floor(fi).astype(int), 0, tab.shape[0] - 2)
    t = fi - i0
    return (1 - t) * tab[i0] + t * tab[i0 + 1]


def _interp2(tab, fi, fj):
    i0 = np.clip(np.floor(fi).astype(int), 0, tab.shape[0] - 2)
    j0 = np.clip(np.floor(fj).astype(int), 0, tab.shape[1] - 2)
    t, u = fi - i0, fj - j0
    return (
        (1 - t) * (1 - u) * tab[i0, j0]
        + t * (1 - u) * tab[i0 + 1, j0]
        + (1 - t) * u * tab[i0, j0 + 1]
        + t * u * tab[i0 + 1, j0 + 1]
    )


def potential_field(spec: PotentialSpec, grid: Grid) -> ScalarField:
    vals = eval_potential(spec, *grid.coords())
    return ScalarField(grid, np.broadcast_to(vals, grid.shape).copy())


def well_table(spec: PotentialSpec) -> list[dict]:
    """Declared expansion data per well; the largest exponent is flagged flattest."""
    if spec.kind == "polynomial":
        wells = [Well((0.0,), 1.0, spec.b)]
    elif spec.kind == "multiwell":
        wells = list(spec.wells)
    else:
        raise ConfigurationError(f"no well table for potential kind {spec.kind!r}")
    qmax = max(w.exponent for w in wells)
    return [
        {
            "center": np.asarray(w.center, dtype=float) if spec.kind == "multiwell" else np.zeros(1),
            "amplitude": w.amplitude,
            "exponent": w.exponent,
            "flattest": bool(abs(w.exponent - qmax) < 1e-12),
        }
        for w in wells
    ]


@dataclass(frozen=True)
class AssumptionReport:
    inf_on_grid: float
    zero_attained: bool
    lower_envelope_ok: bool
    lower_envelope: tuple[float, float]  # (C_1, b) in C_1 (1 + |x|^b) <= V far out
    upper_envelope_ok: bool
    upper_envelope: tuple[float, float]  # (C_2, delta) in V <= C_2 exp(delta |x|)
    ratio_bound_ok: bool
    ratio_range: tuple[float, float]
    zero_set_finite: bool
    zero_set_nodes: int


def check_assumptions(
    spec: PotentialSpec,
    grid: Grid,
    far_fraction: float = 0.5,
    b_probe: float = 1.0,
    zero_tol: float = 1e-9,
) -> AssumptionReport:
    """Report-only check of the structural potential assumptions on the grid."""
    V = potential_field(spec, grid).values
    rad = grid.radius()
    vmin = float(V.min())
    vmax = float(V.max())

    far = rad >= far_fraction * grid.half_width
    lower_ok, lower = False, (0.0, b_probe)
    upper_ok, upper = False, (0.0, 1.0)
    if np.any(far) and vmax > 0:
        denom_low = 1.0 + rad[far] ** b_probe
        c1 = float(np.min(V[far] / denom_low))
        lower_ok = c1 > 0
        lower = (c1, b_probe)
        with np.errstate(over="ignore"):
            # fit delta as the smallest slope making the exponential envelope hold
            pos = V[far] > 0
            if np.any(pos):
                delta = max(float(np.max(np.log(V[far][pos]) / rad[far][pos])), 0.0)
            else:
                delta = 0.0
            c2 = float(np.max(V[far] / np.exp(delta * rad[far]))) if np.any(far) else 0.0
            upper_ok = np.all(V[far] <= (c2 + 1e-12) * np.exp(delta * rad[far]))
            upper = (c2, delta)

    # ratio V(x+y)/V(x) for |y| < 2, sampled along the axes on far-field nodes
    ratios = []
    shift_nodes = max(1, int(round(1.0 / grid.spacing)))
    if shift_nodes < grid.points_per_axis // 4:
        for axis in range(grid.dim):
            rolled_p = np.roll(V, -shift_nodes, axis=axis)
            rolled_m = np.roll(V, shift_nodes, axis=axis)
            core = far & (V > 0)
            # drop wrap-around bands
            sl = [slice(None)] * grid.dim
            sl[axis] = slice(shift_nodes, -shift_nodes)
            mask = np.zeros_like(core)
            mask[tuple(sl)] = True
            core = core & mask
            if np.any(core):
                ratios.append(rolled_p[core] / V[core])
                ratios.append(rolled_m[core] / V[core])
    if ratios:
        allr = np.concatenate(ratios)
        ratio_range = (float(allr.min()), float(allr.max()))
        ratio_ok = ratio_range[0] > 0 and np.isfinite(ratio_range[1])
    else:
        ratio_range = (1.0, 1.0)
        ratio_ok = True

    zero_nodes = int(np.sum(V <= zero_tol * max(vmax, 1.0)))
    # a finite point set occupies a vanishing fraction of nodes
    zero_finite = zero_nodes < max(8, grid.num_nodes // 100)

    return AssumptionReport(
        inf_on_grid=vmin,
        zero_attained=vmin <= zero_tol * max(vmax, 1.0),
        lower_envelope_ok=bool(lower_ok),
        lower_envelope=lower,
        upper_envelope_ok=bool(upper_ok),
        upper_envelope=upper,
        ratio_bound_ok=bool(ratio_ok),
        ratio_range=ratio_range,
        zero_set_finite=bool(zero_finite),
        zero_set_nodes=zero_nodes,
    )
