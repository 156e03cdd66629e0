#!/usr/bin/env python3
"""Sweep the relaxation parameter for one benchmark case and report the best.

Example:
    python3 scripts/sweep_omega.py --case II --nu 0.001 -l 16 \
        --omega-grid 0.02:0.1:0.005 --solver gcp
"""

import argparse

from saddlekit.cli import CASE_MAP, parse_omega_grid, resolve_solver
from saddlekit.problems import build_oseen
from saddlekit.solvers import SolveConfig, omega_sweep


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("-l", "--grid", type=int, default=16, dest="l")
    ap.add_argument("--nu", type=float, default=0.1)
    ap.add_argument("--case", choices=tuple(CASE_MAP), required=True)
    ap.add_argument("--solver", default=None,
                    choices=("gcp", "stationary", "gmres", "qmr"))
    ap.add_argument("--omega-grid", required=True, metavar="a:b:step")
    ap.add_argument("--tol", type=float, default=1e-6)
    ap.add_argument("--max-iters", type=int, default=5000)
    args = ap.parse_args()

    solver = resolve_solver(args.case, args.solver)
    grid = parse_omega_grid(args.omega_grid)
    system = build_oseen(args.l, args.nu)
    family, kind = CASE_MAP[args.case]
    cfg = SolveConfig(tol=args.tol, max_iters=args.max_iters)
    reports = omega_sweep(system, family, kind, grid, solver=solver, cfg=cfg,
                          case_label=args.case, enforce_pd=False)
    for r in reports:
        mark = str(r.iterations) if r.converged else "-"
        print(f"omega={r.omega:<10g} IT={mark:<6} status={r.status}")
    winners = [r for r in reports if r.converged]
    if winners:
        best = min(winners, key=lambda r: r.iterations)
        print(f"best: omega={best.omega:g} IT={best.iterations}")
    else:
        print("best: none converged")


if __name__ == "__main__":
    main()
