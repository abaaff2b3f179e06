"""Command-line entry point: experiment orchestration and artifact emission.

Subcommands: solve, sweep, gamma, blowup, regprobe, nls-oracle.
Exit codes: 0 success, 2 solver failure, 3 configuration failure.  Every
failure also leaves a machine-readable error.json in the output directory.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import diagnostics as diag
from .config import ProblemSpec, load_spec
from .energy import gn_ratio, kinetic
from .errors import ConfigurationError, MfgLabError
from .grid import integrate, lp_norm
from .ground_state import continuation_sweep, nls_oracle, potential_free_ground, solve_mfg
from .hjb import solve_dirichlet
from .potential import well_table
from .regularity import harnack_stat, sample_rhs_family, weighted_morrey_stat
from .solution_io import load_solution, save_solution
from .svg import polyline_plot

FLOAT_FMT = "%.17g"


def _fmt(value) -> str:
    if isinstance(value, float):
        return FLOAT_FMT % value
    return str(value)


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name)
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(path: Path, formulas: list[str], header: list[str], rows: list[list]) -> None:
    """CSV with a leading '#' line documenting what each column computes."""
    lines = ["# " + ", ".join(formulas)]
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    _atomic_write(path, "\n".join(lines) + "\n")


def _out_dir(args) -> Path:
    if args.out:
        return Path(args.out)
    env = os.environ.get("MFGLAB_OUT")
    return Path(env) if env else Path("out")


def _diag_row(rep: diag.DiagnosticsReport) -> list:
    return [
        rep.mass,
        rep.mass_fraction if rep.mass_fraction is not None else float("nan"),
        rep.epsilon,
        rep.kinetic,
        rep.ergodic_constant,
        rep.energy,
        *rep.x_eps,
    ]


_DIAG_FORMULAS = [
    "mass = int m dx",
    "mass_fraction = mass / M*",
    "epsilon = (C_L int |w/m|^r m dx)^(-1/r)",
    "kinetic = C_L int |w/m|^r m dx",
    "ergodic_constant = multiplier of the value-function equation",
    "energy = kinetic + int V m dx - int m^(1+alpha) dx/(1+alpha)",
    "x_eps = argmin of the value function",
]


def cmd_solve(spec: ProblemSpec, out: Path, args) -> int:
    sol = solve_mfg(spec)
    rep = diag.diagnose(sol)
    save_solution(out / "solution.mfgsol", sol)
    header = ["mass", "mass_fraction", "epsilon", "kinetic", "ergodic_constant", "energy"]
    header += [f"x_eps_{k}" for k in range(spec.dim)]
    write_csv(out / "solve.csv", _DIAG_FORMULAS, header, [_diag_row(rep)])
    grid = sol.grid
    if spec.dim == 1:
        x = grid.axis()
        rows = [
            [x[i], sol.pair.m.values[i], sol.u.u.values[i], sol.pair.w.values[0][i]]
            for i in range(grid.points_per_axis)
        ]
        write_csv(
            out / "profile.csv",
            ["x = node coordinate", "m = density", "u = value function", "w = flux"],
            ["x", "m", "u", "w"],
            rows,
        )
        polyline_plot(
            out / "profile.svg",
            [("m", list(x), list(sol.pair.m.values))],
            title="density",
            xlabel="x",
            ylabel="m",
        )
    print(f"solved: mass={sol.mass:.6g} energy={sol.energy:.6g} "
          f"ergodic_constant={sol.ergodic_constant:.6g} iterations={sol.iterations}")
    return 0


def _gamma(spec: ProblemSpec):
    return diag.gamma_and_mstar(spec)


def cmd_gamma(spec: ProblemSpec, out: Path, args) -> int:
    res = _gamma(spec)
    n, r = spec.dim, spec.ham().r
    identity = n / (n + r) * res.m_star ** (r / n)
    write_csv(
        out / "gamma.csv",
        [
            "gamma = sharp ratio constant",
            "m_star = ((1+r/n) gamma)^(n/r)",
            "identity = (n/(n+r)) m_star^(r/n)",
            "search solves",
        ],
        ["gamma", "m_star", "identity_check", "solves"],
        [[res.gamma, res.m_star, identity, len(res.search_history)]],
    )
    print(f"gamma = {res.gamma:.8g}")
    print(f"m_star = {res.m_star:.8g}")
    print(f"identity check: gamma = (n/(n+r)) m_star^(r/n) -> {identity:.8g} "
          f"(gap {abs(identity - res.gamma):.2e})")
    return 0


def _run_sweep(spec: ProblemSpec, res, multistart: bool):
    masses = [f * res.m_star for f in spec.sweep_fractions]
    return continuation_sweep(
        spec, masses, m_star=res.m_star, gamma=res.gamma, multistart_wells=multistart
    )


def cmd_sweep(spec: ProblemSpec, out: Path, args) -> int:
    res = _gamma(spec)
    multistart = spec.potential.kind == "multiwell"
    sweep = _run_sweep(spec, res, multistart)
    header = ["mass", "mass_fraction", "epsilon", "kinetic", "ergodic_constant", "energy"]
    header += [f"x_eps_{k}" for k in range(spec.dim)]
    write_csv(out / "sweep.csv", _DIAG_FORMULAS, header, [_diag_row(rep) for _, rep in sweep])
    print(f"sweep: {len(sweep)} masses up to {sweep[-1][1].mass_fraction:.4g} of m_star")
    return 0


def cmd_blowup(spec: ProblemSpec, out: Path, args) -> int:
    res = _gamma(spec)
    n, r = spec.dim, spec.ham().r
    prof = diag.rescaled_profile(res.solution)
    mu_table = diag.mu_weights(spec.potential, prof.m)
    multistart = spec.potential.kind == "multiwell"
    sweep = _run_sweep(spec, res, multistart)
    reports = [rep for _, rep in sweep]
    q, mu = mu_table.q, mu_table.mu

    fit = diag.blowup_fit(reports, q=q, mu=mu, m_star=res.m_star, r=r, n=n)
    rows = []
    for rep in reports:
        X = 1.0 - (rep.mass / res.m_star) ** (r / n)
        eps_pred = (r / (q * mu) * X) ** (1.0 / (r + q))
        en_pred = ((q + r) / q) * (q * mu / r) ** (r / (r + q)) * X ** (q / (r + q))
        rows.append(
            [rep.mass / res.m_star, rep.epsilon, rep.energy, rep.epsilon / eps_pred, rep.energy / en_pred]
        )
    write_csv(
        out / "fit.csv",
        [
            "mass_frac = M / M*",
            "epsilon = (C_L int |w/m|^r m dx)^(-1/r)",
            "energy = minimized value at this mass",
            "eps_ratio = epsilon / [(r/(q mu)) (1-(M/M*)^(r/n))]^(1/(r+q))",
            "energy_ratio = energy / [((q+r)/q) (q mu/r)^(r/(r+q)) (1-(M/M*)^(r/n))^(q/(r+q))]",
        ],
        ["mass_frac", "epsilon", "energy", "eps_ratio", "energy_ratio"],
        rows,
    )
    write_csv(
        out / "fit_summary.csv",
        [
            "quantity fitted as prefactor * (1-(M/M*)^(r/n))^slope",
            "energy fit uses e * (M*/M); energy_raw the unnormalized values",
        ],
        ["quantity", "slope", "predicted_slope", "prefactor", "predicted_prefactor", "r_squared"],
        [
            ["epsilon", fit.epsilon.slope, fit.epsilon.predicted_slope,
             fit.epsilon.prefactor, fit.epsilon.predicted_prefactor, fit.epsilon.r_squared],
            ["energy", fit.energy.slope, fit.energy.predicted_slope,
             fit.energy.prefactor, fit.energy.predicted_prefactor, fit.energy.r_squared],
            ["energy_raw", fit.energy_raw.slope, fit.energy_raw.predicted_slope,
             fit.energy_raw.prefactor, fit.energy_raw.predicted_prefactor, fit.energy_raw.r_squared],
        ],
    )
    xs = [1.0 - (rep.mass / res.m_star) ** (r / n) for rep in reports]
    polyline_plot(
        out / "eps_fit.svg",
        [
            ("measured", xs, [rep.epsilon for rep in reports]),
            ("law", xs, [(r / (q * mu) * X) ** (1.0 / (r + q)) for X in xs]),
        ],
        title="blow-up scale law",
        xlabel="1 - (M/M*)^(r/n)",
        ylabel="epsilon",
        loglog=True,
    )
    polyline_plot(
        out / "energy_fit.svg",
        [
            ("measured", xs, [rep.energy for rep in reports]),
            ("law", xs, [((q + r) / q) * (q * mu / r) ** (r / (r + q)) * X ** (q / (r + q)) for X in xs]),
        ],
        title="ground-state energy law",
        xlabel="1 - (M/M*)^(r/n)",
        ylabel="energy",
        loglog=True,
    )
    conc = diag.concentration_check(reports, mu_table, res.m_star)
    if spec.potential.kind in ("multiwell", "polynomial"):
        write_csv(
            out / "concentration.csv",
            [
                "mass_frac = M / M*",
                "x_eps = argmin of value function",
                "nearest = closest declared zero of the potential",
                "distance and epsilon in domain units",
                "offset = (x_eps - nearest)/epsilon",
            ],
            ["mass_frac", "x_eps", "nearest", "distance", "epsilon", "in_selected_set"]
            if spec.dim == 1
            else ["mass_frac", "x_eps_0", "x_eps_1", "nearest_0", "nearest_1", "distance", "epsilon", "in_selected_set"],
            [
                [row.mass_fraction, *row.x_eps, *row.nearest_center, row.distance,
                 row.epsilon, int(row.in_selected_set)]
                for row in conc.rows
            ],
        )
    mstar_ext = diag.mstar_extrapolation(reports, q=q, r=r, n=n)
    print(f"m_star (gamma) = {res.m_star:.6g}, m_star (scale extrapolation) = {mstar_ext:.6g}")
    print(f"epsilon law: slope {fit.epsilon.slope:.4f} (predicted {fit.epsilon.predicted_slope:.4f}), "
          f"prefactor {fit.epsilon.prefactor:.4f} (predicted {fit.epsilon.predicted_prefactor:.4f})")
    print(f"energy law:  slope {fit.energy.slope:.4f} (predicted {fit.energy.predicted_slope:.4f})")
    if conc.rows:
        last = conc.rows[-1]
        print(f"concentration: x_eps={last.x_eps} nearest={last.nearest_center} "
              f"dist={last.distance:.4g} (4 eps = {4*last.epsilon:.4g})")
    return 0


def cmd_regprobe(spec: ProblemSpec, out: Path, args) -> int:
    grid = spec.grid()
    ham = spec.ham()
    n, r = spec.dim, ham.r
    p = spec.regprobe_p if spec.regprobe_p is not None else 1.2 * n / r
    fields = sample_rhs_family(grid, p, spec.regprobe_count, spec.seed)

    def probe(f):
        u = solve_dirichlet(grid, f, ham, tol=1e-9).u
        hs = harnack_stat(u, ham, p)
        ws = weighted_morrey_stat(u, ham, p, q=spec.regprobe_q) if n >= 2 else None
        return hs, ws

    workers = max(1, args.threads)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(probe, fields))
    else:
        results = [probe(f) for f in fields]

    rows = []
    for k, (hs, ws) in enumerate(results):
        rows.append([k, lp_norm(fields[k], p), hs.sup, ws.sup if ws else float("nan")])
    write_csv(
        out / "regprobe.csv",
        [
            "member = index in the seeded family",
            "lp_norm = L^p norm of the data (should be 1)",
            "harnack_sup = sup_R int_{B_R/2} |grad u|^r' / R^(n-rhat)",
            "weighted_sup = sup R^q avg_{B_R} |grad u|^r' dist^(r-q)",
        ],
        ["member", "lp_norm", "harnack_sup", "weighted_sup"],
        rows,
    )
    hsup = [row[2] for row in rows]
    wsup = [row[3] for row in rows if np.isfinite(row[3])]
    summary = [
        ["harnack", max(hsup), float(np.median(hsup)), max(hsup) / float(np.median(hsup))],
    ]
    if wsup:
        summary.append(
            ["weighted", max(wsup), float(np.median(wsup)), max(wsup) / float(np.median(wsup))]
        )
    write_csv(
        out / "regprobe_summary.csv",
        ["statistic family", "max over members", "median", "max/median"],
        ["statistic", "max", "median", "max_over_median"],
        summary,
    )
    for name, mx, med, ratio in summary:
        print(f"{name}: max={mx:.6g} median={med:.6g} max/median={ratio:.3f}")
    return 0


def cmd_nls_oracle(spec: ProblemSpec, out: Path, args) -> int:
    if spec.rprime != 2.0:
        raise ConfigurationError("nls-oracle requires rprime = 2")
    res = _gamma(spec)
    sol = res.solution
    pin = spec.domain_l / 16.0
    nls = nls_oracle(spec, mass=sol.mass, pin_rms=pin)
    grid = spec.grid()
    l1 = integrate(np.abs(sol.pair.m.values - nls.pair.m.values), grid) / sol.mass
    lam_gap = abs(nls.chemical_potential / sol.ergodic_constant - 1.0)
    from .ground_state import quintic_soliton_mass

    soliton = float("nan")
    if spec.dim == 1:
        soliton = quintic_soliton_mass(spec.ham())
    write_csv(
        out / "nls.csv",
        [
            "mass of the cross-checked ground state",
            "l1_gap = int |m - v^2| dx / mass",
            "lambda_fixed_point and lambda_flow = multipliers from the two solvers",
            "m_star_gamma vs m_star_soliton (1D closed form)",
        ],
        ["mass", "l1_gap", "lambda_fixed_point", "lambda_flow", "lambda_rel_gap",
         "m_star_gamma", "m_star_soliton"],
        [[sol.mass, l1, sol.ergodic_constant, nls.chemical_potential, lam_gap,
          res.m_star, soliton]],
    )
    print(f"cross-check: |m - v^2|_1 / M = {l1:.3e}, multiplier gap = {lam_gap:.3e}")
    if np.isfinite(soliton):
        print(f"m_star: gamma-based {res.m_star:.6g} vs soliton closed form {soliton:.6g} "
              f"(rel gap {abs(res.m_star/soliton-1):.3e})")
    return 0


_COMMANDS = {
    "solve": cmd_solve,
    "sweep": cmd_sweep,
    "gamma": cmd_gamma,
    "blowup": cmd_blowup,
    "regprobe": cmd_regprobe,
    "nls-oracle": cmd_nls_oracle,
}


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="mfglab",
        description="Ground states of stationary mean-field games at the critical coupling",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, help="path to a key = value config file")
        sp.add_argument("--out", default=None, help="output directory (default $MFGLAB_OUT or ./out)")
        sp.add_argument("--threads", type=int, default=1, help="worker threads where applicable")
    args = parser.parse_args(argv)

    out = _out_dir(args)
    try:
        spec = load_spec(args.config)
        if not args.out and spec.out_dir:
            out = Path(spec.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        return _COMMANDS[args.command](spec, out, args)
    except ConfigurationError as exc:
        _record_error(out, 3, "configuration", exc)
        print(f"configuration error: {exc}", file=sys.stderr)
        return 3
    except MfgLabError as exc:
        _record_error(out, 2, type(exc).__name__, exc)
        print(f"solver error: {exc}", file=sys.stderr)
        return 2


def _record_error(out: Path | None, code: int, kind: str, exc: Exception) -> None:
    if out is None:
        return
    try:
        out.mkdir(parents=True, exist_ok=True)
        (out / "error.json").write_text(
            json.dumps({"exit_code": code, "kind": kind, "message": str(exc)}, sort_keys=True)
        )
    except OSError:
        pass


if __name__ == "__main__":
    sys.exit(main())
