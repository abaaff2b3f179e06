"""Problem description and the flat dotted-key text config format.

Config files are plain text, one `key = value` per line, '#' comments.
Example:

    dim = 1
    rprime = 2.0
    c_h = 1.0
    alpha = critical
    mass = 1.0
    domain_l = 8.0
    grid_n = 1025
    potential.kind = polynomial
    potential.b = 2.0
    tol.hjb = 1e-8
    tol.fixpoint = 1e-7
    damping = 0.5
    seed = 0
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

from .errors import ConfigurationError
from .grid import Grid, ScalarField, make_grid
from .hamiltonian import HamiltonianSpec
from .potential import (
    PotentialSpec,
    Well,
    load_tabulated,
    multiwell_potential,
    polynomial_potential,
    potential_field,
    zero_potential,
)


@dataclass(frozen=True)
class Tolerances:
    hjb: float = 1e-8
    fp: float = 1e-13
    fixpoint: float = 1e-7
    max_iter: int = 800
    hjb_max_iter: int = 120


@dataclass(frozen=True)
class ProblemSpec:
    dim: int = 1
    rprime: float = 2.0
    c_h: float = 1.0
    alpha: float | str = "critical"
    mass: float = 1.0
    domain_l: float = 8.0
    grid_n: int = 1025
    potential: PotentialSpec = field(default_factory=zero_potential)
    tol: Tolerances = field(default_factory=Tolerances)
    damping: float = 0.5
    moll_radius: float | None = None
    seed: int = 0
    scheme: str = "centered"
    sweep_fractions: tuple[float, ...] = (0.90, 0.93, 0.95, 0.97, 0.98, 0.99, 0.995)
    regprobe_p: float | None = None
    regprobe_count: int = 50
    regprobe_q: float | None = None
    out_dir: str | None = None

    def __post_init__(self):
        if self.scheme not in ("centered", "godunov"):
            raise ConfigurationError(f"unknown scheme {self.scheme!r}")
        if isinstance(self.alpha, str) and self.alpha != "critical":
            raise ConfigurationError("alpha must be a positive number or 'critical'")
        if not isinstance(self.alpha, str) and not (self.alpha > 0):
            raise ConfigurationError("alpha must be positive")
        if not (0 < self.damping <= 1):
            raise ConfigurationError("damping must lie in (0, 1]")

    def ham(self) -> HamiltonianSpec:
        return HamiltonianSpec(rprime=self.rprime, c_h=self.c_h)

    def grid(self) -> Grid:
        return make_grid(self.dim, self.domain_l, self.grid_n)

    def alpha_value(self) -> float:
        if self.alpha == "critical":
            return self.ham().r / self.dim
        return float(self.alpha)

    def potential_on_grid(self, grid: Grid | None = None) -> ScalarField:
        return potential_field(self.potential, grid or self.grid())

    def potential_free(self) -> "ProblemSpec":
        return replace(self, potential=zero_potential())


_KNOWN_KEYS = {
    "dim", "rprime", "c_h", "alpha", "mass", "domain_l", "grid_n", "damping",
    "moll_radius", "seed", "scheme", "out_dir",
    "potential.kind", "potential.b", "potential.wells", "potential.d",
    "potential.background", "potential.file",
    "tol.hjb", "tol.fp", "tol.fixpoint", "tol.max_iter", "tol.hjb_max_iter",
    "sweep.fractions", "regprobe.p", "regprobe.count", "regprobe.q",
}


def _parse_lines(text: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"config line {ln}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _KNOWN_KEYS:
            raise ConfigurationError(f"config line {ln}: unknown key {key!r}")
        if key in out:
            raise ConfigurationError(f"config line {ln}: duplicate key {key!r}")
        out[key] = value
    return out


def _wells_from_string(text: str, dim: int) -> list[Well]:
    wells = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        parts = chunk.split(":")
        if len(parts) != 3:
            raise ConfigurationError(f"well spec {chunk!r} must be center:amplitude:exponent")
        center = tuple(float(tok) for tok in parts[0].split(","))
        if len(center) != dim:
            raise ConfigurationError(f"well center {parts[0]!r} has wrong dimension")
        wells.append(Well(center, float(parts[1]), float(parts[2])))
    if not wells:
        raise ConfigurationError("potential.wells is empty")
    return wells


def _float(kv, key, default=None):
    if key not in kv:
        if default is None:
            raise ConfigurationError(f"missing required config key {key!r}")
        return default
    try:
        return float(kv[key])
    except ValueError as exc:
        raise ConfigurationError(f"config key {key!r}: bad number {kv[key]!r}") from exc


def _int(kv, key, default=None):
    val = _float(kv, key, default)
    if val != int(val):
        raise ConfigurationError(f"config key {key!r} must be an integer")
    return int(val)


def load_spec(path: str | Path) -> ProblemSpec:
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"config file {path} not found")
    kv = _parse_lines(path.read_text())

    dim = _int(kv, "dim", 1)
    domain_l = _float(kv, "domain_l", 8.0)
    grid_n = _int(kv, "grid_n", 1025)

    kind = kv.get("potential.kind", "zero")
    if kind == "zero":
        pot = zero_potential()
    elif kind == "polynomial":
        pot = polynomial_potential(_float(kv, "potential.b"))
    elif kind == "multiwell":
        wells = _wells_from_string(kv.get("potential.wells", ""), dim)
        bg = _float(kv, "potential.background", -1.0)
        pot = multiwell_potential(
            wells, radius=_float(kv, "potential.d"), background=None if bg < 0 else bg
        )
    elif kind == "tabulated":
        if "potential.file" not in kv:
            raise ConfigurationError("tabulated potential needs potential.file")
        pot = load_tabulated(kv["potential.file"], make_grid(dim, domain_l, grid_n))
    else:
        raise ConfigurationError(f"unknown potential kind {kind!r}")

    alpha_raw = kv.get("alpha", "critical")
    alpha: float | str = "critical" if alpha_raw == "critical" else float(alpha_raw)

    if "sweep.fractions" in kv:
        fractions = tuple(float(tok) for tok in kv["sweep.fractions"].split(",") if tok.strip())
        if not fractions:
            raise ConfigurationError("sweep.fractions is empty")
    else:
        fractions = (0.90, 0.93, 0.95, 0.97, 0.98, 0.99, 0.995)

    return ProblemSpec(
        dim=dim,
        rprime=_float(kv, "rprime", 2.0),
        c_h=_float(kv, "c_h", 1.0),
        alpha=alpha,
        mass=_float(kv, "mass", 1.0),
        domain_l=domain_l,
        grid_n=grid_n,
        potential=pot,
        tol=Tolerances(
            hjb=_float(kv, "tol.hjb", 1e-8),
            fp=_float(kv, "tol.fp", 1e-13),
            fixpoint=_float(kv, "tol.fixpoint", 1e-7),
            max_iter=_int(kv, "tol.max_iter", 800),
            hjb_max_iter=_int(kv, "tol.hjb_max_iter", 120),
        ),
        damping=_float(kv, "damping", 0.5),
        moll_radius=(None if "moll_radius" not in kv else _float(kv, "moll_radius")),
        seed=_int(kv, "seed", 0),
        scheme=kv.get("scheme", "centered"),
        sweep_fractions=fractions,
        regprobe_p=(None if "regprobe.p" not in kv else _float(kv, "regprobe.p")),
        regprobe_count=_int(kv, "regprobe.count", 50),
        regprobe_q=(None if "regprobe.q" not in kv else _float(kv, "regprobe.q")),
        out_dir=kv.get("out_dir"),
    )
