"""Self-describing binary container for solved ground states.

Layout: one magic line, one JSON header line (sorted keys), then the node
arrays in header order as raw little-endian float64, C order.  Saving a loaded
solution reproduces the file byte for byte.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .energy import FlowPair
from .errors import FormatError
from .grid import ScalarField, VectorField, make_grid
from .ground_state import MfgSolution
from .hamiltonian import HamiltonianSpec
from .hjb import ErgodicSolution

MAGIC = b"MFGLAB-SOLUTION 1\n"


def save_solution(path: str | Path, sol: MfgSolution) -> None:
    grid = sol.grid
    arrays = {"m": sol.pair.m.values, "u": sol.u.u.values}
    for ax in range(grid.dim):
        arrays[f"w{ax}"] = sol.pair.w.values[ax]
    arrays["potential"] = sol.potential.values
    header = {
        "dim": grid.dim,
        "n": grid.points_per_axis,
        "l": grid.half_width,
        "rprime": sol.ham.rprime,
        "c_h": sol.ham.c_h,
        "alpha": sol.alpha,
        "mass": sol.mass,
        "ergodic_constant": sol.ergodic_constant,
        "energy": sol.energy,
        "converged": sol.converged,
        "iterations": sol.iterations,
        "residual": sol.residual,
        "hjb_residual": sol.u.residual_norm,
        "hjb_iterations": sol.u.iterations,
        "scheme": sol.u.scheme,
        "potential_free": sol.potential_free,
        "arrays": list(arrays.keys()),
    }
    payload = bytearray()
    payload += MAGIC
    payload += (json.dumps(header, sort_keys=True) + "\n").encode()
    for name in header["arrays"]:
        payload += np.ascontiguousarray(arrays[name], dtype="<f8").tobytes()
    Path(path).write_bytes(bytes(payload))


def load_solution(path: str | Path) -> MfgSolution:
    raw = Path(path).read_bytes()
    if not raw.startswith(MAGIC):
        raise FormatError("not a solution container (bad magic)")
    rest = raw[len(MAGIC):]
    nl = rest.find(b"\n")
    if nl < 0:
        raise FormatError("truncated container header")
    try:
        header = json.loads(rest[:nl].decode())
    except json.JSONDecodeError as exc:
        raise FormatError(f"unreadable container header: {exc}") from exc
    body = rest[nl + 1:]

    try:
        grid = make_grid(header["dim"], header["l"], header["n"])
        ham = HamiltonianSpec(rprime=header["rprime"], c_h=header["c_h"])
        names = header["arrays"]
    except KeyError as exc:
        raise FormatError(f"container header missing field {exc}") from exc

    node_count = grid.num_nodes
    expected = len(names) * node_count * 8
    if len(body) != expected:
        raise FormatError(
            f"payload has {len(body)} bytes, header implies {expected}"
        )
    arrays = {}
    for k, name in enumerate(names):
        chunk = body[k * node_count * 8 : (k + 1) * node_count * 8]
        arrays[name] = np.frombuffer(chunk, dtype="<f8").reshape(grid.shape).copy()

    m = ScalarField(grid, arrays["m"])
    if float(m.values.min()) < 0:
        raise FormatError("stored density has negative entries")
    u_vals = arrays["u"]
    if abs(float(u_vals.min())) > 1e-9:
        raise FormatError("stored value function is not min-normalized")
    w = VectorField(grid, np.stack([arrays[f"w{ax}"] for ax in range(grid.dim)]))
    V = ScalarField(grid, arrays["potential"])

    u = ErgodicSolution(
        u=ScalarField(grid, u_vals),
        ergodic_constant=header["ergodic_constant"],
        residual_norm=header["hjb_residual"],
        iterations=header["hjb_iterations"],
        scheme=header["scheme"],
    )
    return MfgSolution(
        pair=FlowPair(m, w),
        u=u,
        ergodic_constant=header["ergodic_constant"],
        energy=header["energy"],
        converged=header["converged"],
        iterations=header["iterations"],
        residual=header["residual"],
        residual_history=(),
        mass=header["mass"],
        alpha=header["alpha"],
        ham=ham,
        potential=V,
        potential_free=header["potential_free"],
    )
