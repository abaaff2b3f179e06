#!/usr/bin/env python3
"""Resolution study of the sharp constant and the critical mass.

Solves the potential-free critical problem on a sequence of grids, prints the
constant, the critical mass, the integral-identity residuals, and (for the
quadratic Hamiltonian in 1D) the gap to the closed-form soliton mass.
"""
import argparse

import numpy as np

from mfglab.config import ProblemSpec
from mfglab.diagnostics import gamma_and_mstar, pohozaev_residuals
from mfglab.ground_state import quintic_soliton_mass


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--grids", default="257,513,1025,2049")
    ap.add_argument("--domain-l", type=float, default=8.0)
    ap.add_argument("--rprime", type=float, default=2.0)
    ap.add_argument("--c-h", type=float, default=1.0)
    args = ap.parse_args()

    print(f"{'N':>6} {'gamma':>12} {'m_star':>12} {'poho1':>10} {'poho2':>10} {'solves':>7}")
    reference = None
    for n in (int(tok) for tok in args.grids.split(",")):
        spec = ProblemSpec(dim=1, rprime=args.rprime, c_h=args.c_h, alpha="critical",
                           mass=1.0, domain_l=args.domain_l, grid_n=n)
        res = gamma_and_mstar(spec)
        poho = pohozaev_residuals(res.solution)
        print(f"{n:>6} {res.gamma:>12.8f} {res.m_star:>12.8f} "
              f"{poho.res1:>10.2e} {poho.res2:>10.2e} {len(res.search_history):>7}")
        reference = res
    if args.rprime == 2.0 and reference is not None:
        soliton = quintic_soliton_mass(reference.solution.ham)
        gap = abs(reference.m_star / soliton - 1.0)
        print(f"\nclosed-form soliton mass: {soliton:.10f}  (finest-grid gap {gap:.2e})")


if __name__ == "__main__":
    main()
