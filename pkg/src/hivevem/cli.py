"""Command-line driver: convergence studies and VTK export.

``hivevem study`` runs the honeycomb Poisson solver over a range of
levels, prints an aligned table of errors and dyadic orders, and can
write the same content as CSV.  ``hivevem export`` writes meshes,
solutions or lifted solutions as legacy VTK.

Exit codes: 0 success, 1 configuration error, 2 numerical failure.

The environment variable ``HIVE_VEM_THREADS`` caps the BLAS thread
pool; the driver itself is sequential, so runs with a fixed
configuration are bit-for-bit reproducible.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from . import analysis, lift, solver, system, vtkio
from .lattice import MAX_LEVEL, build_mesh
from .problem import PROBLEMS, ManufacturedProblem, get_problem
from .quadrature import SUPPORTED_DEGREES

CSV_COLUMNS = (
    "level", "h", "dofs",
    "e_ih_l2", "r_ih_l2",
    "e_ih_h1", "r_ih_h1",
    "e_ih_linf", "r_ih_linf",
    "e_l2", "r_l2",
    "e_lift_l2", "r_lift_l2",
    "e_lift_h1h", "r_lift_h1h",
)


class ConfigError(ValueError):
    """Invalid study or export configuration."""


@dataclass
class StudyConfig:
    min_level: int = 2
    max_level: int = 7
    problem: str = "hex-sine"
    lift_enabled: bool = False
    lift_scheme: str = "lattice15-corrected"
    quad_load: int = 4
    quad_error: int = 6
    solver: solver.SolverConfig = field(default_factory=solver.SolverConfig)
    csv_path: str | None = None

    def __post_init__(self):
        if not 1 <= self.min_level <= self.max_level <= MAX_LEVEL:
            raise ConfigError(
                f"need 1 <= min-level <= max-level <= {MAX_LEVEL}, "
                f"got {self.min_level}..{self.max_level}"
            )
        if self.problem not in PROBLEMS:
            raise ConfigError(
                f"unknown problem {self.problem!r}; available: {sorted(PROBLEMS)}"
            )
        if self.lift_enabled:
            if self.lift_scheme not in lift.SCHEMES:
                raise ConfigError(
                    f"unknown lift scheme {self.lift_scheme!r}; "
                    f"available: {lift.SCHEMES}"
                )
            if self.max_level < lift.MIN_LIFT_LEVEL:
                raise ConfigError(
                    f"lift needs max-level >= {lift.MIN_LIFT_LEVEL}"
                )
        for name, degree in (("quad-load", self.quad_load),
                             ("quad-error", self.quad_error)):
            if degree not in SUPPORTED_DEGREES:
                raise ConfigError(
                    f"{name} degree {degree} unsupported; "
                    f"available: {SUPPORTED_DEGREES}"
                )


def solve_level(
    level: int,
    problem: ManufacturedProblem,
    quad_load: int = 4,
    solver_config: solver.SolverConfig | None = None,
):
    """Solve one level; returns ``(mesh, u_h, dofs, stats)``."""
    mesh = build_mesh(level)
    A, b, dofs = system.assemble(mesh, problem, load_quad_degree=quad_load)
    x, stats = solver.solve(A, b, solver_config)
    return mesh, system.expand(x, dofs, mesh), dofs, stats


def study_row(
    level: int,
    problem: ManufacturedProblem,
    config: StudyConfig,
) -> analysis.StudyRow:
    mesh, u_h, dofs, _ = solve_level(
        level, problem, config.quad_load, config.solver
    )
    u_i = system.interpolate(problem, mesh)
    l2, h1, linf = analysis.norms_superclose(u_h, u_i)
    u_rec = system.recover_centers(u_h, problem, config.quad_load)
    row = analysis.StudyRow(
        level=level,
        h=mesh.s,
        dofs=dofs.n_dofs,
        e_ih_l2=l2,
        e_ih_h1=h1,
        e_ih_linf=linf,
        e_l2=analysis.norm_l2_true(u_rec, problem, config.quad_error),
    )
    if config.lift_enabled and level >= lift.MIN_LIFT_LEVEL:
        grid = lift.build_patch_grid(mesh)
        lifted = lift.lift_solution(u_h, problem, grid, config.lift_scheme)
        row.e_lift_l2 = analysis.norm_l2_true(lifted, problem, config.quad_error)
        row.e_lift_h1h = analysis.norm_h1_broken_true(
            lifted, problem, config.quad_error
        )
    return row


def run_study(config: StudyConfig) -> list[analysis.StudyRow]:
    problem = get_problem(config.problem)
    rows = [
        study_row(level, problem, config)
        for level in range(config.min_level, config.max_level + 1)
    ]
    return analysis.orders(rows)


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (int, np.integer)):
        return str(value)
    return f"{value:.3e}"


def rows_to_csv(rows: list[analysis.StudyRow]) -> str:
    out = [",".join(CSV_COLUMNS)]
    for r in rows:
        out.append(",".join(_cell(v) for v in (
            r.level, r.h, r.dofs,
            r.e_ih_l2, r.r_ih_l2,
            r.e_ih_h1, r.r_ih_h1,
            r.e_ih_linf, r.r_ih_linf,
            r.e_l2, r.r_l2,
            r.e_lift_l2, r.r_lift_l2,
            r.e_lift_h1h, r.r_lift_h1h,
        )))
    return "\n".join(out) + "\n"


def render_table(rows: list[analysis.StudyRow]) -> str:
    head = (
        f"{'lvl':>3} {'h':>9} {'dofs':>7} "
        f"{'|Iu-uh|_L2':>11} {'r':>5} {'|Iu-uh|_H1':>11} {'r':>5} "
        f"{'|Iu-uh|_oo':>11} {'r':>5} {'|u-uh|_L2':>11} {'r':>5}"
    )
    has_lift = any(r.e_lift_l2 is not None for r in rows)
    if has_lift:
        head += f" {'|u-lift|_L2':>12} {'r':>5} {'|u-lift|_H1h':>13} {'r':>5}"
    lines = [head]
    for r in rows:
        line = (
            f"{r.level:>3} {r.h:>9.3e} {r.dofs:>7} "
            f"{r.e_ih_l2:>11.3e} {r.r_ih_l2:>5.2f} "
            f"{r.e_ih_h1:>11.3e} {r.r_ih_h1:>5.2f} "
            f"{r.e_ih_linf:>11.3e} {r.r_ih_linf:>5.2f} "
            f"{r.e_l2:>11.3e} {r.r_l2:>5.2f}"
        )
        if has_lift:
            if r.e_lift_l2 is None:
                line += f" {'':>12} {'':>5} {'':>13} {'':>5}"
            else:
                line += (
                    f" {r.e_lift_l2:>12.3e} {r.r_lift_l2:>5.2f}"
                    f" {r.e_lift_h1h:>13.3e} {r.r_lift_h1h:>5.2f}"
                )
        lines.append(line)
    return "\n".join(lines)


def export(
    level: int,
    what: str,
    path,
    problem_name: str = "hex-sine",
    quad_load: int = 4,
    solver_config: solver.SolverConfig | None = None,
) -> None:
    """Write a mesh, solution or lifted solution as legacy VTK."""
    if what not in ("mesh", "solution", "lift"):
        raise ConfigError(f"cannot export {what!r}; use mesh, solution or lift")
    if what == "mesh":
        vtkio.write_vtk(build_mesh(level), path, title=f"honeycomb level {level}")
        return
    problem = get_problem(problem_name)
    mesh, u_h, _, _ = solve_level(level, problem, quad_load, solver_config)
    exact = problem.u(mesh.node_xy[:, 0], mesh.node_xy[:, 1])
    if what == "solution":
        data = {"u_h": u_h.values, "error": exact - u_h.values}
        title = f"{problem_name} solution, level {level}"
    else:
        grid = lift.build_patch_grid(mesh)
        lifted = lift.lift_solution(u_h, problem, grid)
        values = _lift_at_nodes(lifted)
        data = {"u_lift": values, "error": exact - values}
        title = f"{problem_name} lift, level {level}"
    vtkio.write_vtk(mesh, path, point_data=data, title=title)


def _lift_at_nodes(lifted: lift.LiftResult) -> np.ndarray:
    """Lift values at every node, lowest patch index winning on seams."""
    grid = lifted.grid
    mesh = grid.mesh
    owner = np.full(mesh.n_nodes, -1, dtype=np.int64)
    for patch in reversed(grid.patches):
        owner[patch.site_nodes] = patch.index
    values = np.empty(mesh.n_nodes)
    for patch in grid.patches:
        sel = np.flatnonzero(owner == patch.index)
        if sel.size:
            values[sel] = lifted.fits[patch.index](mesh.node_xy[sel])
    return values


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hivevem", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    st = sub.add_parser("study", help="run a convergence study")
    st.add_argument("--min-level", type=int, default=2)
    st.add_argument("--max-level", type=int, default=7)
    st.add_argument("--problem", default="hex-sine", metavar="NAME")
    st.add_argument("--lift", action="store_true",
                    help="fit and measure the patchwise cubic lift")
    st.add_argument("--lift-scheme", default="lattice15-corrected",
                    choices=lift.SCHEMES, metavar="SCHEME")
    st.add_argument("--quad-load", type=int, default=4, metavar="DEG")
    st.add_argument("--quad-error", type=int, default=6, metavar="DEG")
    st.add_argument("--solver", default="cg", choices=solver.METHODS)
    st.add_argument("--tol", type=float, default=1e-14)
    st.add_argument("--maxit", type=int, default=None)
    st.add_argument("--csv", default=None, metavar="PATH")

    ex = sub.add_parser("export", help="write legacy VTK files")
    ex.add_argument("--level", type=int, required=True)
    ex.add_argument("--what", required=True, choices=("mesh", "solution", "lift"))
    ex.add_argument("--path", required=True)
    ex.add_argument("--problem", default="hex-sine", metavar="NAME")
    return parser


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _limit_threads() -> None:
    cap = os.environ.get("HIVE_VEM_THREADS")
    if not cap:
        return
    try:
        n = max(1, int(cap))
    except ValueError:
        raise ConfigError(f"HIVE_VEM_THREADS must be an integer, got {cap!r}")
    try:
        import threadpoolctl

        threadpoolctl.threadpool_limits(limits=n)
    except ImportError:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ.setdefault(var, str(n))


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        _limit_threads()
        if args.command == "study":
            config = StudyConfig(
                min_level=args.min_level,
                max_level=args.max_level,
                problem=args.problem,
                lift_enabled=args.lift,
                lift_scheme=args.lift_scheme,
                quad_load=args.quad_load,
                quad_error=args.quad_error,
                solver=solver.SolverConfig(
                    method=args.solver, tol=args.tol, max_iterations=args.maxit
                ),
                csv_path=args.csv,
            )
            start = time.perf_counter()
            rows = run_study(config)
            elapsed = time.perf_counter() - start
            print(render_table(rows))
            print(f"# {config.problem}, solver={config.solver.method}, "
                  f"{elapsed:.2f}s")
            if config.csv_path:
                with open(config.csv_path, "w", newline="\n") as fh:
                    fh.write(rows_to_csv(rows))
        else:
            export(args.level, args.what, args.path, args.problem)
    except (ConfigError, ValueError) as exc:
        print(f"hivevem: configuration error: {exc}", file=sys.stderr)
        return 1
    except (solver.SolverError, lift.LiftRankError, FloatingPointError,
            ArithmeticError) as exc:
        print(f"hivevem: numerical failure: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
