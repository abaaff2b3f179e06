"""Coupled ground-state solvers.

solve_mfg runs the damped fixed point
    m -> HJB(g = V - m^alpha) -> drift -> invariant density -> mix,
potential_free_ground adds translation (and optional scale) gauge pins, and
nls_oracle cross-checks the quadratic-Hamiltonian case through the equivalent
mass-constrained Schrodinger problem solved by normalized gradient flow.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .config import ProblemSpec
from .energy import FlowPair, kinetic, total_energy
from .errors import (
    NumericsError,
    SolverDivergedError,
    UnderResolvedError,
    UnsupportedError,
)
from .fokker_planck import flux_w, solve_invariant
from .grid import Grid, ScalarField, VectorField, integrate
from .hamiltonian import HamiltonianSpec
from .hjb import ErgodicSolution, drift_from_u, solve_ergodic
from .potential import potential_field

SUP_CAP_FACTOR = 1e8


@dataclass(frozen=True)
class MfgSolution:
    pair: FlowPair
    u: ErgodicSolution
    ergodic_constant: float
    energy: float
    converged: bool
    iterations: int
    residual: float
    residual_history: tuple[float, ...]
    mass: float
    alpha: float
    ham: HamiltonianSpec
    potential: ScalarField
    potential_free: bool
    pin_shift: tuple[float, ...] | None = None
    pin_scale_factor: float | None = None

    @property
    def grid(self) -> Grid:
        return self.pair.grid


def _gaussian_density(grid: Grid, mass: float, center, sigma: float) -> np.ndarray:
    coords = grid.coords()
    rho2 = sum((x - c) ** 2 for x, c in zip(coords, center))
    vals = np.exp(-0.5 * rho2 / sigma**2)
    return vals * (mass / integrate(vals, grid))


def _centroid(m: np.ndarray, grid: Grid) -> np.ndarray:
    total = integrate(m, grid)
    return np.array([integrate(x * m, grid) / total for x in grid.coords()])


def _shift_density(m: np.ndarray, grid: Grid, shift: np.ndarray) -> np.ndarray:
    """m(x + shift) by linear interpolation, zero beyond the box."""
    ax = grid.axis()
    if grid.dim == 1:
        out = np.interp(ax + shift[0], ax, m, left=0.0, right=0.0)
        return out
    from scipy.interpolate import RegularGridInterpolator

    interp = RegularGridInterpolator((ax, ax), m, bounds_error=False, fill_value=0.0)
    gx, gy = np.meshgrid(ax + shift[0], ax + shift[1], indexing="ij")
    return interp(np.stack([gx.ravel(), gy.ravel()], axis=-1)).reshape(grid.shape)


def _rescale_width(m: np.ndarray, grid: Grid, s: float) -> np.ndarray:
    """s^n m(s x): mass-preserving dilation by interpolation."""
    ax = grid.axis()
    n = grid.dim
    if n == 1:
        out = np.interp(s * ax, ax, m, left=0.0, right=0.0)
    else:
        from scipy.interpolate import RegularGridInterpolator

        interp = RegularGridInterpolator((ax, ax), m, bounds_error=False, fill_value=0.0)
        gx, gy = np.meshgrid(s * ax, s * ax, indexing="ij")
        out = interp(np.stack([gx.ravel(), gy.ravel()], axis=-1)).reshape(grid.shape)
    return s**n * out


def _rms_radius(m: np.ndarray, grid: Grid) -> float:
    total = integrate(m, grid)
    c = _centroid(m, grid)
    rho2 = sum((x - ci) ** 2 for x, ci in zip(grid.coords(), c))
    return float(np.sqrt(integrate(rho2 * m, grid) / total))


def _init_density(spec: ProblemSpec, grid: Grid, V: ScalarField, mass: float, init) -> np.ndarray:
    if init is not None:
        m0 = init.m.values if isinstance(init, FlowPair) else np.asarray(
            init.values if isinstance(init, ScalarField) else init, dtype=float
        )
        if m0.shape != grid.shape:
            from .errors import ConfigurationError

            raise ConfigurationError(
                f"warm-start density shape {m0.shape} does not match grid {grid.shape}"
            )
        m0 = np.maximum(m0, 0.0)
        return m0 * (mass / integrate(m0, grid))
    flat = int(np.argmin(V.values.ravel()))
    center = [x.ravel()[flat] for x in grid.coords()]
    return _gaussian_density(grid, mass, center, sigma=grid.half_width / 6.0)


def solve_mfg(
    spec: ProblemSpec,
    mass: float | None = None,
    init: FlowPair | ScalarField | np.ndarray | None = None,
    pin_translation: bool = False,
    pin_scale: float | None = None,
    potential: ScalarField | None = None,
) -> MfgSolution:
    """Damped Picard iteration on the coupled system at prescribed total mass.

    pin_translation keeps the density centroid at the origin (potential-free
    runs); pin_scale, when set, rescales each iterate to that RMS radius,
    fixing the dilation gauge of the mass-critical potential-free problem.
    Both pins preserve the mass exactly.
    """
    grid = spec.grid()
    ham = spec.ham()
    alpha = spec.alpha_value()
    M = float(mass if mass is not None else spec.mass)
    if not (M > 0):
        raise ValueError("mass must be positive")
    V = potential if potential is not None else spec.potential_on_grid(grid)
    potential_free = bool(np.max(np.abs(V.values)) == 0.0)

    h = grid.spacing
    m = _init_density(spec, grid, V, M, init)
    theta = spec.damping
    res_prev = np.inf
    history: list[float] = []
    u_sol: ErgodicSolution | None = None
    u_warm: np.ndarray | None = None
    sup_cap = SUP_CAP_FACTOR * M / (2.0 * grid.half_width) ** grid.dim
    last_shift = np.zeros(grid.dim)
    last_scale = 1.0
    converged = False
    iterations = 0

    for it in range(1, spec.tol.max_iter + 1):
        iterations = it
        g = ScalarField(grid, V.values - m**alpha)
        u_sol = solve_ergodic(
            grid,
            g,
            ham,
            tol=spec.tol.hjb,
            max_iter=spec.tol.hjb_max_iter,
            scheme=spec.scheme,
            u_init=u_warm,
        )
        u_warm = u_sol.u.values
        drift = drift_from_u(u_sol, ham)
        m_new = solve_invariant(
            grid,
            drift,
            M,
            advection="upwind" if spec.scheme == "godunov" else "centered",
            kernel_tol=spec.tol.fp,
        ).values

        if pin_translation:
            shift = _centroid(m_new, grid)
            if np.max(np.abs(shift)) > 1e-15:
                m_new = _shift_density(m_new, grid, shift)
                m_new = np.maximum(m_new, 0.0)
                m_new *= M / integrate(m_new, grid)
            last_shift = shift
        if pin_scale is not None:
            s = _rms_radius(m_new, grid) / pin_scale
            if abs(s - 1.0) > 1e-14:
                m_new = np.maximum(_rescale_width(m_new, grid, s), 0.0)
                m_new *= M / integrate(m_new, grid)
            last_scale = s

        if not np.all(np.isfinite(m_new)):
            raise NumericsError("fixed-point iterate is not finite")
        if float(np.max(m_new)) > sup_cap:
            raise UnderResolvedError(
                "density amplitude exceeded the cap; reduce the mass or refine the grid"
            )

        res = integrate(np.abs(m_new - m), grid) / M
        history.append(res)

        kin = kinetic(FlowPair(ScalarField(grid, m), flux_w(ScalarField(grid, m), u_sol, ham)), ham)
        if np.isfinite(kin) and kin > 0:
            eps = kin ** (-1.0 / ham.r)
            if eps < 2.0 * h:
                raise UnderResolvedError(
                    f"blow-up scale {eps:.3e} fell below twice the spacing {h:.3e}; "
                    "reduce the mass or refine the grid"
                )

        if res <= spec.tol.fixpoint:
            m = m_new
            converged = True
            break
        m_mixed = (1.0 - theta) * m + theta * m_new
        # secant extrapolation along the increment direction: near-neutral
        # modes of the fixed-point map contract geometrically, so the ratio of
        # consecutive increments estimates the dominant eigenvalue
        boosted = False
        if it >= 4 and it % 4 == 0 and np.isfinite(res_prev) and 0.2 < res / res_prev < 0.995:
            rho = res / res_prev
            m_mixed = m_mixed + min(rho / (1.0 - rho), 20.0) * (m_mixed - m)
            m_mixed = np.maximum(m_mixed, 0.0)
            boosted = True
        m = m_mixed
        m *= M / integrate(m, grid)
        if not boosted:
            if res > 1.05 * res_prev:
                theta = max(0.5 * theta, 0.02 * spec.damping)
            elif res < res_prev:
                theta = min(spec.damping, 1.25 * theta)
        res_prev = res

    if not converged:
        raise SolverDivergedError(
            f"MFG fixed point did not reach tol={spec.tol.fixpoint} in "
            f"{spec.tol.max_iter} iterations (last residual {history[-1]:.3e})",
            residual=history[-1],
            history=history,
        )

    # final consistent triple at the accepted density
    g = ScalarField(grid, V.values - m**alpha)
    u_sol = solve_ergodic(
        grid, g, ham, tol=spec.tol.hjb, max_iter=spec.tol.hjb_max_iter,
        scheme=spec.scheme, u_init=u_warm,
    )
    m_field = ScalarField(grid, m)
    pair = FlowPair(m_field, flux_w(m_field, u_sol, ham))
    energy = total_energy(pair, V if not potential_free else None, alpha, ham)
    return MfgSolution(
        pair=pair,
        u=u_sol,
        ergodic_constant=u_sol.ergodic_constant,
        energy=energy,
        converged=True,
        iterations=iterations,
        residual=history[-1],
        residual_history=tuple(history),
        mass=M,
        alpha=alpha,
        ham=ham,
        potential=V,
        potential_free=potential_free,
        pin_shift=tuple(float(s) for s in last_shift) if pin_translation else None,
        pin_scale_factor=float(last_scale) if pin_scale is not None else None,
    )


def potential_free_ground(
    spec: ProblemSpec,
    mass: float | None = None,
    init: FlowPair | ScalarField | None = None,
    pin_scale: float | None = None,
) -> MfgSolution:
    """Ground state of the potential-free system with gauge pins.

    The translation pin removes the translation invariance; the scale pin
    (target RMS radius, default L/16) removes the dilation invariance of the
    mass-critical problem, which otherwise lets iterates drift along the
    scaling orbit without changing the energy ratio.

    At the critical coupling the system only has localized solutions at one
    mass (the integral identities force it).  With mass=None that mass is
    found by a root search on the scale-pin drift and the genuine ground
    state is returned; with an explicit mass the pinned projective state is
    returned and pin_scale_factor records how far it is from a true solution
    (1 means genuine).
    """
    pfspec = spec.potential_free()
    target = pin_scale if pin_scale is not None else spec.domain_l / 16.0
    if mass is None and pfspec.alpha == "critical":
        sol, _ = find_critical_mass(pfspec, initial_mass=spec.mass, pin_scale=target)
        return sol
    return solve_mfg(
        pfspec, mass=mass, init=init, pin_translation=True, pin_scale=target
    )


def find_critical_mass(
    spec: ProblemSpec,
    initial_mass: float = 1.0,
    pin_scale: float | None = None,
    rtol: float = 5e-5,
    max_solves: int = 40,
) -> tuple[MfgSolution, list[tuple[float, float]]]:
    """Locate the unique mass carrying a localized potential-free critical
    ground state.

    The scale-pinned fixed point converges at every mass, but each unpinned
    step dilates the iterate by a factor s(M) that is > 1 below the critical
    mass, < 1 above it, and 1 exactly at it.  Bracketing and secant iteration
    on log s(M) = 0 give the critical mass; the returned solution is genuine
    (|s - 1| <= rtol).  Returns (solution, [(mass, s)] history).
    """
    pfspec = spec.potential_free()
    target = pin_scale if pin_scale is not None else pfspec.domain_l / 16.0

    history: list[tuple[float, float]] = []
    warm: FlowPair | None = None

    def drift_at(M: float) -> tuple[float, MfgSolution]:
        nonlocal warm
        sol = solve_mfg(pfspec, mass=M, init=warm, pin_translation=True, pin_scale=target)
        warm = sol.pair
        s = sol.pin_scale_factor
        history.append((M, s))
        return s, sol

    M = float(initial_mass)
    s, sol = drift_at(M)
    if abs(s - 1.0) <= rtol:
        return sol, history
    # bracket the root of log s
    grow = 1.6 if s > 1.0 else 1.0 / 1.6
    M_lo, s_lo = M, s
    for _ in range(max_solves):
        M_hi = M_lo * grow
        s_hi, sol = drift_at(M_hi)
        if abs(s_hi - 1.0) <= rtol:
            return sol, history
        if (s_lo > 1.0) != (s_hi > 1.0):
            break
        M_lo, s_lo = M_hi, s_hi
    else:
        raise SolverDivergedError("could not bracket the critical mass", residual=s_hi - 1.0)

    # secant iteration on (log M, log s) inside the bracket
    a, fa = np.log(M_lo), np.log(s_lo)
    b, fb = np.log(M_hi), np.log(s_hi)
    for _ in range(max_solves):
        c = b - fb * (b - a) / (fb - fa)
        if not (min(a, b) <= c <= max(a, b)):
            c = 0.5 * (a + b)
        s_c, sol = drift_at(float(np.exp(c)))
        if abs(s_c - 1.0) <= rtol:
            return sol, history
        fc = np.log(s_c)
        if (fc > 0) == (fa > 0):
            a, fa = c, fc
        else:
            b, fb = c, fc
    raise SolverDivergedError(
        f"critical-mass search did not settle within {max_solves} solves",
        residual=abs(history[-1][1] - 1.0),
    )


def continuation_sweep(
    spec: ProblemSpec,
    masses: list[float],
    init: FlowPair | None = None,
    multistart_wells: bool = False,
    gamma: float | None = None,
    m_star: float | None = None,
):
    """Warm-started ascending-mass sweep; returns [(MfgSolution, DiagnosticsReport)].

    Aborts cleanly (partial results) at the first under-resolved blow-up; any
    other solver failure is re-raised annotated with the failing mass index.
    """
    from .diagnostics import diagnose  # local import to avoid a module cycle
    from .potential import well_table

    if any(b <= a for a, b in zip(masses, masses[1:])):
        raise ValueError("masses must be strictly increasing")
    out = []
    grid = spec.grid()

    if multistart_wells:
        # one warm-start chain per declared well; the reported solution at each
        # mass is the lowest-energy chain (ground-state selection can switch
        # wells along the sweep, so the chains are kept alive throughout)
        wells = well_table(spec.potential)
        chains: list[FlowPair | None] = [None] * len(wells)
        for k, M in enumerate(masses):
            sols: list[MfgSolution] = []
            aborted = False
            for j, entry in enumerate(wells):
                start = chains[j]
                if start is None:
                    start = ScalarField(
                        grid,
                        _gaussian_density(grid, M, entry["center"], sigma=grid.half_width / 10.0),
                    )
                try:
                    sol = solve_mfg(spec, mass=M, init=start)
                except UnderResolvedError:
                    aborted = True
                    break
                except SolverDivergedError as exc:
                    raise SolverDivergedError(
                        f"sweep failed at mass index {k} (mass {M}, well {j}): {exc}",
                        residual=exc.residual,
                        history=exc.history,
                    ) from exc
                chains[j] = sol.pair
                sols.append(sol)
            if aborted or not sols:
                break
            best = min(sols, key=lambda s: s.energy)
            out.append((best, diagnose(best, gamma=gamma, m_star=m_star)))
        return out

    warm: FlowPair | None = init
    for k, M in enumerate(masses):
        try:
            sol = solve_mfg(spec, mass=M, init=warm)
        except UnderResolvedError:
            break
        except SolverDivergedError as exc:
            raise SolverDivergedError(
                f"sweep failed at mass index {k} (mass {M}): {exc}",
                residual=exc.residual,
                history=exc.history,
            ) from exc
        warm = sol.pair
        out.append((sol, diagnose(sol, gamma=gamma, m_star=m_star)))
    return out


@dataclass(frozen=True)
class NlsGroundState:
    """Quadratic-case oracle: v solves the mass-constrained Schrodinger problem."""

    pair: FlowPair
    v: ScalarField
    chemical_potential: float
    iterations: int
    mu: float


def _dirichlet_laplacian(grid: Grid) -> sp.csr_matrix:
    n = grid.points_per_axis
    h2 = grid.spacing**2
    main = -2.0 * np.ones(n) / h2
    off = np.ones(n - 1) / h2
    lap1 = sp.diags([off, main, off], [-1, 0, 1], format="csr")
    if grid.dim == 1:
        return lap1
    eye = sp.identity(n, format="csr")
    return sp.kron(lap1, eye, format="csr") + sp.kron(eye, lap1, format="csr")


def nls_oracle(
    spec: ProblemSpec, mass: float | None = None, pin_rms: float | None = None
) -> NlsGroundState:
    """Normalized gradient flow for -mu Lap v + (V - lam) v - v^(2 alpha + 1) = 0,
    int v^2 = M, valid only for the quadratic Hamiltonian (rprime = 2).

    The equivalence sets mu = 1/C_H and maps the ground state through
    m = v^2, w = 2 mu C_H v grad v = grad m.

    pin_rms fixes the RMS radius of the density v^2 each step; use it for the
    potential-free critical problem, whose soliton family is scale-neutral,
    to select the same gauge as the fixed-point solver being cross-checked.
    """
    if spec.rprime != 2.0:
        raise UnsupportedError("the Schrodinger reduction requires rprime = 2")
    grid = spec.grid()
    ham = spec.ham()
    alpha = spec.alpha_value()
    M = float(mass if mass is not None else spec.mass)
    mu = 1.0 / ham.c_h
    V = spec.potential_on_grid(grid).values

    flat = int(np.argmin(V.ravel()))
    center = [x.ravel()[flat] for x in grid.coords()]
    v = _gaussian_density(grid, 1.0, center, sigma=grid.half_width / 8.0)
    v = np.sqrt(np.maximum(v, 0.0))
    v *= np.sqrt(M / integrate(v**2, grid))

    lap = _dirichlet_laplacian(grid)
    dt = 0.25 * grid.spacing / max(1.0, mu)
    solver = spla.splu(
        (sp.identity(grid.num_nodes, format="csr") - dt * mu * lap).tocsc()
    )
    weights = grid.trapezoid_weights()

    def chemical_potential(vv: np.ndarray) -> float:
        # Rayleigh quotient of the discrete operator (boundary values are ~0)
        action = (-mu * (lap @ vv.ravel())).reshape(grid.shape)
        kin = float(np.sum(weights * action * vv))
        pot = float(np.sum(weights * V * vv**2))
        coup = float(np.sum(weights * vv ** (2 * alpha + 2)))
        return (kin + pot - coup) / M

    lam = chemical_potential(v)
    max_steps = 200_000
    for step in range(1, max_steps + 1):
        rhs = v + dt * (-V * v + v ** (2 * alpha + 1))
        v_half = solver.solve(rhs.ravel()).reshape(grid.shape)
        v_half = np.maximum(v_half, 0.0)
        if pin_rms is not None:
            dens = v_half**2
            shift = _centroid(dens, grid)
            if np.max(np.abs(shift)) > 1e-15:
                dens = np.maximum(_shift_density(dens, grid, shift), 0.0)
            s = _rms_radius(dens, grid) / pin_rms
            if abs(s - 1.0) > 1e-14:
                dens = np.maximum(_rescale_width(dens, grid, s), 0.0)
            v_half = np.sqrt(dens)
        nrm = integrate(v_half**2, grid)
        if not np.isfinite(nrm) or nrm <= 0:
            raise NumericsError("normalized gradient flow broke down")
        v_new = v_half * np.sqrt(M / nrm)
        lam_new = chemical_potential(v_new)
        v = v_new
        if abs(lam_new - lam) < 1e-10:
            lam = lam_new
            break
        lam = lam_new
    else:
        raise SolverDivergedError(
            "normalized gradient flow stagnated before the chemical potential settled",
            residual=abs(lam_new - lam),
        )

    m_vals = v**2
    m_vals *= M / integrate(m_vals, grid)
    m = ScalarField(grid, m_vals)
    from .operators import scheme_gradient

    gradv = scheme_gradient(v, grid, "centered")
    w = VectorField(grid, 2.0 * mu * ham.c_h * v * gradv)
    return NlsGroundState(
        pair=FlowPair(m, w),
        v=ScalarField(grid, v),
        chemical_potential=float(lam),
        iterations=step,
        mu=mu,
    )


def quintic_soliton_mass(ham: HamiltonianSpec, points: int = 40001) -> float:
    """Closed-form critical mass for the 1D quadratic-Hamiltonian case at the
    mass-critical coupling (alpha = 2): quadrature of the quintic soliton
    3^(1/4) sech^(1/2)(2x), scaled by sqrt(mu) with mu = 1/C_H."""
    if ham.rprime != 2.0:
        raise UnsupportedError("soliton oracle requires rprime = 2")
    x = np.linspace(-20.0, 20.0, points)
    q2 = np.sqrt(3.0) / np.cosh(2.0 * x)
    h = x[1] - x[0]
    mass_q = h * (np.sum(q2) - 0.5 * (q2[0] + q2[-1]))
    return float(np.sqrt(1.0 / ham.c_h) * mass_q)
