"""Power-law Hamiltonian |p| -> C_H |p|^r' and its Legendre-dual Lagrangian."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError


@dataclass(frozen=True)
class HamiltonianSpec:
    """Hamiltonian C_H |p|^rprime with conjugate exponent r and dual coefficient C_L.

    The Lagrangian is C_L |q|^r with 1/r + 1/rprime = 1 and
    C_L = (1/r) (rprime * C_H)^(1/(1-rprime)), so that
    L(grad H(p)) = p . grad H(p) - H(p) for every p.
    """

    rprime: float
    c_h: float = 1.0

    def __post_init__(self):
        if not (self.rprime > 1):
            raise ConfigurationError(f"rprime must exceed 1, got {self.rprime}")
        if not (self.c_h > 0):
            raise ConfigurationError(f"c_h must be positive, got {self.c_h}")

    @property
    def r(self) -> float:
        return self.rprime / (self.rprime - 1.0)

    @property
    def c_l(self) -> float:
        return (1.0 / self.r) * (self.rprime * self.c_h) ** (1.0 / (1.0 - self.rprime))


def _norm(p: np.ndarray) -> np.ndarray:
    p = np.asarray(p, dtype=np.float64)
    if p.ndim == 0:
        return np.abs(p)
    return np.sqrt(np.sum(p**2, axis=0))


def h_value(p: np.ndarray, spec: HamiltonianSpec) -> np.ndarray | float:
    """C_H |p|^rprime, with the component axis first for vector input."""
    out = spec.c_h * _norm(p) ** spec.rprime
    return float(out) if np.ndim(out) == 0 else out


def h_grad(p: np.ndarray, spec: HamiltonianSpec) -> np.ndarray:
    """grad H = C_H rprime |p|^(rprime-2) p, continuously extended by 0 at p = 0."""
    p = np.atleast_1d(np.asarray(p, dtype=np.float64))
    mag = _norm(p)
    mag = np.atleast_1d(mag) if p.ndim == 1 else mag
    scale = np.zeros_like(mag)
    nz = mag > 0
    scale[nz] = spec.c_h * spec.rprime * mag[nz] ** (spec.rprime - 2.0)
    return scale * p


def lagrangian(q: np.ndarray, spec: HamiltonianSpec) -> np.ndarray | float:
    """C_L |q|^r, the Legendre transform of the Hamiltonian."""
    out = spec.c_l * _norm(q) ** spec.r
    return float(out) if np.ndim(out) == 0 else out
