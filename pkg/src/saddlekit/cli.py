"""Command-line front end: generate problems, solve, sweep, analyze, tabulate.

Cases map onto preconditioner families exactly as in the benchmark setup:
I/II constraint, III/IV block-diagonal, V/VI block-triangular; odd cases
use the symmetric scaled P = omega*H, even cases the triangular split.

Exit codes: 0 converged, 2 iteration limit, 3 divergence or breakdown,
64 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys

import numpy as np

from . import __version__
from .analysis import (
    check_lemma4,
    gcp_convergence_indicator,
    omega_bound_symmetric,
    omega_bound_triangular,
    pd_bound,
)
from .precond import (
    BLOCK_DIAG,
    BLOCK_TRI,
    CONSTRAINT,
    PChoice,
    SYMMETRIC_SCALED,
    TRIANGULAR_SPLIT,
    build,
)
from .problems import build_oseen, export
from .solvers import (
    CONVERGED,
    MAX_ITERS,
    SolveConfig,
    omega_sweep,
    solve_with,
)

EXIT_OK = 0
EXIT_MAX_ITERS = 2
EXIT_DIVERGED = 3
EXIT_USAGE = 64

CASE_MAP = {
    "I": (CONSTRAINT, SYMMETRIC_SCALED),
    "II": (CONSTRAINT, TRIANGULAR_SPLIT),
    "III": (BLOCK_DIAG, SYMMETRIC_SCALED),
    "IV": (BLOCK_DIAG, TRIANGULAR_SPLIT),
    "V": (BLOCK_TRI, SYMMETRIC_SCALED),
    "VI": (BLOCK_TRI, TRIANGULAR_SPLIT),
}
CASES = tuple(CASE_MAP)

# Published optimal omega per (table, case, nu, l); None marks a cell that
# did not converge within 5000 steps for any omega in (0, 2000].
PUBLISHED_OMEGA = {
    2: {
        ("I", 0.1, 16): 1.00, ("I", 0.1, 32): 1.00,
        ("II", 0.1, 16): 0.98, ("II", 0.1, 32): 0.99,
        ("II", 0.001, 16): 0.08, ("II", 0.001, 32): 0.16,
    },
    3: {
        ("I", 0.1, 16): 1.50, ("I", 0.1, 32): 1.61,
        ("II", 0.1, 16): 0.63, ("II", 0.1, 32): 0.64,
        ("III", 0.1, 16): 0.03, ("III", 0.1, 32): 0.02,
        ("IV", 0.1, 16): 0.02, ("IV", 0.1, 32): 0.02,
        ("V", 0.1, 16): 0.01, ("V", 0.1, 32): 0.02,
        ("I", 0.001, 16): 26.40, ("I", 0.001, 32): 28.62,
        ("II", 0.001, 16): 0.04, ("II", 0.001, 32): 0.05,
        ("III", 0.001, 16): 0.04, ("III", 0.001, 32): 0.02,
        ("IV", 0.001, 16): 0.06, ("IV", 0.001, 32): 0.10,
        ("V", 0.001, 16): 0.02, ("V", 0.001, 32): 0.01,
    },
    4: {
        ("I", 0.1, 16): 1.52, ("I", 0.1, 32): 1.59,
        ("II", 0.1, 16): 0.60, ("II", 0.1, 32): 0.63,
        ("III", 0.1, 16): 2.12, ("III", 0.1, 32): 2.11,
        ("IV", 0.1, 16): 1.00, ("IV", 0.1, 32): 0.99,
        ("V", 0.1, 16): 1.26, ("V", 0.1, 32): 1.11,
        ("VI", 0.1, 16): 0.90, ("VI", 0.1, 32): 0.85,
        ("I", 0.001, 16): 24.10, ("I", 0.001, 32): 21.60,
        ("II", 0.001, 16): 0.06, ("II", 0.001, 32): 0.05,
        ("IV", 0.001, 16): 0.09, ("IV", 0.001, 32): 0.11,
        ("V", 0.001, 16): 28.35, ("V", 0.001, 32): 25.67,
        ("VI", 0.001, 16): 0.02, ("VI", 0.001, 32): 0.04,
    },
}
TABLE_SOLVER = {2: "auto", 3: "gmres", 4: "qmr"}
DASH_GRID = np.geomspace(1e-3, 2000.0, 10)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


class UsageError(Exception):
    pass


def parse_omega_grid(text: str) -> list[float]:
    """Parse 'a:b:step' into an inclusive arithmetic grid."""
    try:
        a, b, step = (float(t) for t in text.split(":"))
    except ValueError as exc:
        raise UsageError(f"bad omega grid {text!r}: expected a:b:step") from exc
    if step <= 0 or b < a:
        raise UsageError(f"bad omega grid {text!r}: need a <= b and step > 0")
    return [float(w) for w in np.arange(a, b + 0.5 * step, step)]


def default_solver(case: str) -> str:
    return "stationary" if CASE_MAP[case][0] == BLOCK_TRI else "gcp"


def resolve_solver(case: str, solver: str | None) -> str:
    """Check the case/solver pairing; 'gcp' needs a singular family."""
    family = CASE_MAP[case][0]
    if solver is None:
        return default_solver(case)
    if solver == "gcp" and family == BLOCK_TRI:
        raise UsageError(
            f"case {case} uses the nonsingular block-triangular preconditioner; "
            "the GCP scheme applies a Moore-Penrose inverse and targets the "
            "singular families (cases I-IV).  Use --solver stationary, gmres or qmr.")
    if solver == "stationary" and family != BLOCK_TRI:
        raise UsageError(
            f"case {case} uses a singular preconditioner; the stationary scheme "
            "with an exact inverse needs cases V/VI.  Use --solver gcp, gmres or qmr.")
    return solver


def build_case(system, case: str, omega: float, enforce_pd: bool = False):
    family, kind = CASE_MAP[case]
    return build(system, family, PChoice(kind=kind, omega=omega),
                 enforce_pd=enforce_pd)


def _common_flags(p: argparse.ArgumentParser, need_case: bool = True):
    p.add_argument("-l", "--grid", type=int, default=16, dest="l",
                   help="cells per side of the MAC grid (default 16)")
    p.add_argument("--nu", type=float, default=0.1, help="viscosity (default 0.1)")
    if need_case:
        p.add_argument("--case", choices=CASES, required=True)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--max-iters", type=int, default=5000)
    p.add_argument("--restart", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out", default=None, help="output file (default: stdout)")


def make_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="saddlekit",
                     description="Singular saddle-point solver toolkit")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate and export a cavity problem")
    g.add_argument("-l", "--grid", type=int, default=16, dest="l")
    g.add_argument("--nu", type=float, default=0.1)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True, help="output directory")

    s = sub.add_parser("solve", help="run a single solve")
    _common_flags(s)
    s.add_argument("--solver", choices=("gcp", "stationary", "gmres", "qmr"))
    s.add_argument("--omega", type=float, required=True)

    w = sub.add_parser("sweep", help="solve over an omega grid")
    _common_flags(w)
    w.add_argument("--solver", choices=("gcp", "stationary", "gmres", "qmr"))
    w.add_argument("--omega-grid", required=True, metavar="a:b:step")

    a = sub.add_parser("analyze", help="spectral diagnostics for one case")
    _common_flags(a)
    a.add_argument("--omega", type=float, required=True)

    t = sub.add_parser("table", help="reproduce a benchmark table")
    t.add_argument("table_id", type=int, choices=(2, 3, 4))
    t.add_argument("-l", "--grid", type=int, default=16, dest="l")
    t.add_argument("--tol", type=float, default=1e-6)
    t.add_argument("--max-iters", type=int, default=5000)
    t.add_argument("--restart", type=int, default=10)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--out", default=None)
    return parser


def _emit(text: str, out: str | None):
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w") as fh:
            fh.write(text)


def _report_payload(report):
    return {
        "converged": report.converged,
        "iterations": report.iterations,
        "final_res": report.final_res,
        "omega": report.omega,
        "status": report.status,
        "case": report.case_label,
    }


def _report_text(report, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(_report_payload(report), indent=2, default=float) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(["case", "omega", "iterations", "final_res", "status"])
    w.writerow([report.case_label, f"{report.omega:g}", report.iterations,
                f"{report.final_res:.6e}", report.status])
    return buf.getvalue()


def cmd_gen(args) -> int:
    try:
        system = build_oseen(args.l, args.nu, seed=args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    meta = export(system, args.out)
    print(json.dumps(meta))
    return EXIT_OK


def cmd_solve(args) -> int:
    solver = resolve_solver(args.case, args.solver)
    system = build_oseen(args.l, args.nu, seed=args.seed)
    pc = build_case(system, args.case, args.omega)
    cfg = SolveConfig(tol=args.tol, max_iters=args.max_iters, restart=args.restart)
    report = solve_with(solver, system, pc, cfg, case_label=args.case)
    _emit(_report_text(report, args.format), args.out)
    if report.converged:
        return EXIT_OK
    return EXIT_MAX_ITERS if report.status == MAX_ITERS else EXIT_DIVERGED


def cmd_sweep(args) -> int:
    solver = resolve_solver(args.case, args.solver)
    grid = parse_omega_grid(args.omega_grid)
    system = build_oseen(args.l, args.nu, seed=args.seed)
    family, kind = CASE_MAP[args.case]
    cfg = SolveConfig(tol=args.tol, max_iters=args.max_iters, restart=args.restart)
    reports = omega_sweep(system, family, kind, grid, solver=solver, cfg=cfg,
                          case_label=args.case, enforce_pd=False)
    reports.sort(key=lambda r: r.omega)
    winners = [r for r in reports if r.converged]
    best = min(winners, key=lambda r: r.iterations) if winners else None
    if args.format == "json":
        payload = {"case": args.case, "best_omega": best.omega if best else None,
                   "runs": [_report_payload(r) for r in reports]}
        _emit(json.dumps(payload, indent=2, default=float) + "\n", args.out)
    else:
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow(["omega", "iterations", "final_res", "status"])
        for r in reports:
            final = "-" if not np.isfinite(r.final_res) else f"{r.final_res:.6e}"
            w.writerow([f"{r.omega:g}", r.iterations if r.converged else "-",
                        final, r.status])
        if best is not None:
            buf.write(f"# best_omega={best.omega:g} iterations={best.iterations}\n")
        else:
            buf.write("# best_omega=-\n")
        _emit(buf.getvalue(), args.out)
    return EXIT_OK


def cmd_analyze(args) -> int:
    if args.l > 16:
        raise UsageError("analyze is limited to l <= 16 (dense spectral cost)")
    family, kind = CASE_MAP[args.case]
    system = build_oseen(args.l, args.nu, seed=args.seed)
    try:
        pc = build_case(system, args.case, args.omega, enforce_pd=True)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    bounds = {
        "omega_bound_symmetric": omega_bound_symmetric(system.W),
        "omega_bound_triangular": omega_bound_triangular(system.W),
        "pd_bound": pd_bound(system.W),
    }
    if family == BLOCK_TRI:
        payload = {"case": args.case, "omega": args.omega, "note":
                   "nonsingular block-triangular family: the singular-iteration "
                   "convergence diagnostics target cases I-IV"}
        payload.update(bounds)
        _emit(json.dumps(payload, indent=2, default=float) + "\n", args.out)
        return EXIT_OK
    report = check_lemma4(system, pc)
    if report.gamma_XPW is None and family == CONSTRAINT:
        report.gamma_XPW = gcp_convergence_indicator(system, pc)
    _emit(report.to_json(case=args.case, **bounds) + "\n", args.out)
    return EXIT_OK


def _table_cell(system, case, solver, omega, cfg):
    """Best converged report among {0.9, 1.0, 1.1} x published omega."""
    family, kind = CASE_MAP[case]
    reports = omega_sweep(system, family, kind,
                          [0.9 * omega, omega, 1.1 * omega], solver=solver,
                          cfg=cfg, case_label=case, enforce_pd=False)
    winners = [r for r in reports if r.converged]
    if not winners:
        return None
    return min(winners, key=lambda r: r.iterations)


def _table_dash_confirmed(system, case, solver, cfg):
    """True when no grid omega converges (the table's '-' mark)."""
    family, kind = CASE_MAP[case]
    reports = omega_sweep(system, family, kind, DASH_GRID, solver=solver,
                          cfg=cfg, case_label=case, enforce_pd=False)
    return not any(r.converged for r in reports)


def run_table(table_id: int, l: int, cfg: SolveConfig, seed: int = 0) -> list[dict]:
    """Long-form rows (nu, case, omega, iterations, status) for one table."""
    rows = []
    for nu in (0.1, 0.001):
        system = build_oseen(l, nu, seed=seed)
        for case in CASES:
            solver = TABLE_SOLVER[table_id]
            if solver == "auto":
                solver = default_solver(case)
            omega = PUBLISHED_OMEGA[table_id].get((case, nu, l))
            if omega is None:
                confirmed = _table_dash_confirmed(system, case, solver, cfg)
                rows.append({"nu": nu, "case": case, "omega": "-",
                             "iterations": "-",
                             "status": "nonconvergent" if confirmed else "CONVERGED?"})
                continue
            best = _table_cell(system, case, solver, omega, cfg)
            if best is None:
                rows.append({"nu": nu, "case": case, "omega": f"{omega:g}",
                             "iterations": "-", "status": "nonconvergent"})
            else:
                rows.append({"nu": nu, "case": case, "omega": f"{best.omega:g}",
                             "iterations": best.iterations, "status": best.status})
    return rows


def cmd_table(args) -> int:
    if args.l not in (16, 32):
        raise UsageError("published omegas are tabulated for l in {16, 32}")
    cfg = SolveConfig(tol=args.tol, max_iters=args.max_iters, restart=args.restart)
    rows = run_table(args.table_id, args.l, cfg, seed=args.seed)
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(["nu", "case", "omega", "iterations", "status"])
    for row in rows:
        w.writerow([row["nu"], row["case"], row["omega"], row["iterations"],
                    row["status"]])
    _emit(buf.getvalue(), args.out)
    return EXIT_OK


_COMMANDS = {"gen": cmd_gen, "solve": cmd_solve, "sweep": cmd_sweep,
             "analyze": cmd_analyze, "table": cmd_table}


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"saddlekit: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
