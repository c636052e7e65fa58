"""Command-line driver: mesh generation, simulation runs, refinement
studies, stabilization and solver comparisons.

Every subcommand accepts --config pointing to a JSON file whose keys match
the command's option names (dashes become underscores); explicit flags win
over config values.  Outputs are deterministic for fixed inputs and seed.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .mesh import MeshError, read_mesh, write_mesh
from .mesh.io import MeshFormatError
from .output import write_csv, write_partition_csv, write_vtk
from .problems import cantilever, mandel, manufactured, studies
from .solver import SolverError

BoolFlag = argparse.BooleanOptionalAction


def _merge_config(args: argparse.Namespace, parser: argparse.ArgumentParser,
                  defaults: dict) -> argparse.Namespace:
    """Flags override config values override defaults."""
    cfg = {}
    if getattr(args, "config", None):
        path = Path(args.config)
        if not path.is_file():
            parser.error(f"config file not found: {path}")
        try:
            cfg = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            parser.error(f"config file {path}: {exc}")
        unknown = set(cfg) - set(defaults)
        if unknown:
            raise ValueError(f"unknown config keys {sorted(unknown)}; "
                             f"expected a subset of {sorted(defaults)}")
    merged = {}
    for key, default in defaults.items():
        flag = getattr(args, key, None)
        merged[key] = flag if flag is not None else cfg.get(key, default)
    return argparse.Namespace(**merged)


def _resolve_mesh(ns, parser):
    if getattr(ns, "mesh_file", None):
        path = Path(ns.mesh_file)
        if not path.is_file():
            parser.error(f"mesh file not found: {path}")
        try:
            return read_mesh(path)
        except MeshFormatError as exc:
            parser.error(f"mesh file {path}: {exc}")
    n = ns.n if ns.n is not None else 10 * 2**ns.level
    return studies.family_mesh(ns.family, n, seed=ns.seed,
                               lloyd_iters=ns.lloyd_iters)


def _outdir(ns) -> Path:
    out = Path(ns.outdir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _parse_list(text, cast):
    if isinstance(text, (list, tuple)):
        return [cast(v) for v in text]
    return [cast(v) for v in str(text).split(",") if v]


def _add_mesh_options(sub, with_file=True):
    sub.add_argument("--family", choices=studies.FAMILIES)
    sub.add_argument("--n", type=int, help="subdivisions per side "
                     "(Voronoi: side count, n^2 cells)")
    sub.add_argument("--level", type=int,
                     help="refinement level, n = 10 * 2^level")
    sub.add_argument("--seed", type=int)
    sub.add_argument("--lloyd-iters", type=int, dest="lloyd_iters")
    if with_file:
        sub.add_argument("--mesh-file", dest="mesh_file",
                         help="read the mesh from a text file instead")


MESH_DEFAULTS = {"family": "cartesian", "n": None, "level": 0, "seed": 0,
                 "lloyd_iters": 20, "out": "mesh.txt", "vtk": None}


def cmd_mesh(args, parser) -> int:
    ns = _merge_config(args, parser, MESH_DEFAULTS)
    ns.mesh_file = None
    mesh = _resolve_mesh(ns, parser)
    write_mesh(ns.out, mesh)
    if ns.vtk:
        write_vtk(ns.vtk, mesh)
    print(f"wrote {ns.out}: {mesh.num_vertices} vertices, "
          f"{mesh.num_cells} cells, {mesh.num_faces} faces, "
          f"{mesh.num_unknowns} unknowns")
    return 0


RUN_DEFAULTS = {"problem": "cantilever", "family": "cartesian", "n": None,
                "level": 0, "seed": 0, "lloyd_iters": 20, "mesh_file": None,
                "dt": 1.0e-5, "steps": None, "t_end": None,
                "stabilize": False, "solver": "direct", "rtol": 1e-6,
                "maxit": 500, "outdir": "out"}


def cmd_run(args, parser) -> int:
    ns = _merge_config(args, parser, RUN_DEFAULTS)
    mesh = _resolve_mesh(ns, parser)
    if ns.steps is None and ns.t_end is None:
        ns.steps = 1
    elif ns.steps is None:
        ns.steps = max(1, int(round(ns.t_end / ns.dt)))

    if ns.problem == "cantilever":
        system, state = cantilever.setup(
            mesh, ns.dt, stabilize=ns.stabilize, linear_solver=ns.solver,
            rtol=ns.rtol, maxiter=ns.maxit)
    elif ns.problem == "manufactured":
        system, state = manufactured.setup(
            mesh, ns.dt, stabilize=ns.stabilize, linear_solver=ns.solver)
    elif ns.problem == "mandel":
        system, _, state = mandel.setup(
            mesh, ns.dt, linear_solver=ns.solver, stabilize=ns.stabilize)
    else:
        raise ValueError(f"unknown problem '{ns.problem}'")

    out = _outdir(ns)
    report = []
    for step in range(1, ns.steps + 1):
        state = system.step(state)
        rep = system.last_report
        report.append({"step": step, "time": state.time,
                       "iterations": 0 if rep is None else rep.iterations,
                       "residual_reduction":
                           None if rep is None else rep.reduction})
    write_csv(out / "report.csv",
              ["step", "time", "iterations", "residual_reduction"], report)
    cell_data = {"pressure": state.p}
    if system.partition is not None:
        cell_data["macro"] = system.partition.cell_macro.astype(float)
        write_partition_csv(out / "partition.csv", system.partition)
    write_vtk(out / "state_final.vtk", mesh, cell_data=cell_data,
              point_data={"displacement": state.u.reshape(-1, 2)})
    print(f"ran {ns.problem} on {mesh.num_cells} cells for {ns.steps} "
          f"steps to t = {state.time:g}; outputs in {out}")
    return 0


CONVERGE_DEFAULTS = {"family": "cartesian", "levels": 5, "base": 5,
                     "dt0": 0.1, "t_end": 1.0, "seed": 0, "lloyd_iters": 20,
                     "stabilize": False, "workers": None, "outdir": "out",
                     "time_refinement": False, "n_fixed": 40}


def cmd_converge(args, parser) -> int:
    ns = _merge_config(args, parser, CONVERGE_DEFAULTS)
    out = _outdir(ns)
    if ns.time_refinement:
        rows = studies.time_refinement_study(
            ns.family, ns.n_fixed, t_end=ns.t_end, stabilize=ns.stabilize,
            seed=ns.seed, lloyd_iters=ns.lloyd_iters, workers=ns.workers)
        x_key = "dt"
    else:
        rows = studies.convergence_study(
            ns.family, ns.levels, base=ns.base, dt0=ns.dt0, t_end=ns.t_end,
            stabilize=ns.stabilize, seed=ns.seed,
            lloyd_iters=ns.lloyd_iters, workers=ns.workers)
        x_key = "h"
    for i, row in enumerate(rows):
        row["level"] = i
        for key in ("e_p", "e_u", "e_s"):
            if i == 0:
                row[f"rate_{key}"] = None
            else:
                row[f"rate_{key}"] = studies.observed_rates(
                    rows[i - 1:i + 1], x_key, (key,))[key]
    header = ["level", "cells", "unknowns", "h", "dt", "steps",
              "e_p", "e_u", "e_s", "rate_e_p", "rate_e_u", "rate_e_s"]
    name = ("time_refinement" if ns.time_refinement else "convergence")
    write_csv(out / f"{name}_{ns.family}.csv", header, rows)
    for row in rows:
        rates = "  ".join(
            "rate=." if row[f"rate_{k}"] is None
            else f"{row[f'rate_{k}']:.2f}" for k in ("e_p", "e_u", "e_s"))
        print(f"cells={row['cells']:<6d} h={row['h']:.4f} dt={row['dt']:.5f}"
              f"  e_p={row['e_p']:.3e} e_u={row['e_u']:.3e}"
              f" e_s={row['e_s']:.3e}  {rates}")
    return 0


MANDEL_DEFAULTS = {"n": 20, "dt_frac": 1.0e-4, "times": "0.01,0.05,0.1,0.5",
                   "n_terms": 200, "outdir": "out", "family": "cartesian",
                   "seed": 0, "lloyd_iters": 20}


def cmd_mandel(args, parser) -> int:
    ns = _merge_config(args, parser, MANDEL_DEFAULTS)
    mesh = studies.family_mesh(ns.family, ns.n, seed=ns.seed,
                               lloyd_iters=ns.lloyd_iters)
    fractions = _parse_list(ns.times, float)
    # dt and the sample times are fractions of the characteristic time
    t_char = mandel.MandelSolution(mandel.default_material(),
                                   n_terms=8).t_char
    system, solution, state0 = mandel.setup(mesh, ns.dt_frac * t_char,
                                            n_terms=ns.n_terms)
    result = mandel.run_profiles(system, solution, state0,
                                 [f * solution.t_char for f in fractions])
    out = _outdir(ns)
    p0 = result["p_undrained"]
    for frac, profile in zip(sorted(fractions), result["profiles"]):
        rows = [(x, ph / p0, pe / p0) for x, ph, pe in
                zip(profile["x"], profile["p"], profile["p_point"])]
        write_csv(out / f"profile_{frac:g}Tc.csv",
                  ["x", "p_norm", "p_exact_norm"], rows)
        err = np.max(np.abs(profile["p"] - profile["p_exact"])) / p0
        print(f"t = {frac:g} T_c: max cell-mean error {err:.3e} "
              f"(normalized by the undrained pressure)")
    write_csv(out / "history.csv", ["t_frac", "p_norm"],
              zip(result["history_t"] / solution.t_char,
                  result["history_p"]))
    overshoot = float(np.max(result["history_p"]))
    print(f"peak sealed-edge pressure {overshoot:.4f} x undrained "
          f"(early-time rise {'present' if overshoot > 1 else 'absent'})")
    return 0


CANTILEVER_DEFAULTS = {"families": "cartesian,skewed,hybrid,voronoi",
                       "n": 10, "dt": 1.0e-5, "seed": 0, "lloyd_iters": 20,
                       "outdir": "out", "vtk": False}


def cmd_cantilever(args, parser) -> int:
    ns = _merge_config(args, parser, CANTILEVER_DEFAULTS)
    families = _parse_list(ns.families, str)
    rows = studies.stabilization_study(families, n=ns.n, dt=ns.dt,
                                       seed=ns.seed,
                                       lloyd_iters=ns.lloyd_iters)
    for row in rows:
        row["ratio"] = (row["stabilized"] / row["unstabilized"]
                        if row["unstabilized"] > 0 else None)
    out = _outdir(ns)
    write_csv(out / "indicator.csv",
              ["family", "cells", "dt", "unstabilized", "stabilized",
               "ratio"], rows)
    for row in rows:
        print(f"{row['family']:<10s} cells={row['cells']:<5d} "
              f"indicator unstabilized={row['unstabilized']:.3e} "
              f"stabilized={row['stabilized']:.3e}")
    if ns.vtk:
        for family in families:
            mesh = studies.family_mesh(family, ns.n, seed=ns.seed,
                                       lloyd_iters=ns.lloyd_iters)
            for label, flag in (("unstab", False), ("stab", True)):
                system, state = cantilever.setup(mesh, ns.dt,
                                                 stabilize=flag)
                state = system.step(state)
                cell_data = {"pressure": state.p}
                if system.partition is not None:
                    cell_data["macro"] = \
                        system.partition.cell_macro.astype(float)
                    write_partition_csv(
                        out / f"partition_{family}.csv", system.partition)
                write_vtk(out / f"cantilever_{family}_{label}.vtk", mesh,
                          cell_data=cell_data,
                          point_data={"displacement":
                                      state.u.reshape(-1, 2)})
    return 0


BENCH_DEFAULTS = {"levels": "0,1,2", "family": "cartesian", "base": 10,
                  "dt": 1.0e-5, "stabilize": True, "rtol": 1e-6, "seed": 0,
                  "lloyd_iters": 20, "outdir": "out"}


def cmd_solver_bench(args, parser) -> int:
    ns = _merge_config(args, parser, BENCH_DEFAULTS)
    rows = studies.solver_study(
        _parse_list(ns.levels, int), family=ns.family, base=ns.base,
        dt=ns.dt, stabilize=ns.stabilize, rtol=ns.rtol, seed=ns.seed,
        lloyd_iters=ns.lloyd_iters)
    out = _outdir(ns)
    write_csv(out / "solver_report.csv",
              ["level", "family", "cells", "unknowns", "dt", "stabilized",
               "iterations", "residual_reduction"], rows)
    for row in rows:
        print(f"level {row['level']}: {row['unknowns']} unknowns, "
              f"{row['iterations']} iterations")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="poromech",
        description="Coupled poroelasticity on polygonal meshes: "
                    "mimetic flow, virtual-element mechanics.")
    subs = parser.add_subparsers(dest="command", required=True)

    sub = subs.add_parser("mesh", help="generate a mesh file")
    _add_mesh_options(sub, with_file=False)
    sub.add_argument("--out")
    sub.add_argument("--vtk")
    sub.set_defaults(func=cmd_mesh)

    sub = subs.add_parser("run", help="run one simulation")
    sub.add_argument("--problem",
                     choices=("mandel", "manufactured", "cantilever"))
    _add_mesh_options(sub)
    sub.add_argument("--dt", type=float)
    sub.add_argument("--steps", type=int)
    sub.add_argument("--t-end", type=float, dest="t_end")
    sub.add_argument("--stabilize", action=BoolFlag)
    sub.add_argument("--solver", choices=("direct", "gmres"))
    sub.add_argument("--rtol", type=float)
    sub.add_argument("--maxit", type=int)
    sub.add_argument("--outdir")
    sub.set_defaults(func=cmd_run)

    sub = subs.add_parser("converge", help="refinement ladder study")
    sub.add_argument("--family", choices=studies.FAMILIES)
    sub.add_argument("--levels", type=int)
    sub.add_argument("--base", type=int)
    sub.add_argument("--dt0", type=float)
    sub.add_argument("--t-end", type=float, dest="t_end")
    sub.add_argument("--seed", type=int)
    sub.add_argument("--lloyd-iters", type=int, dest="lloyd_iters")
    sub.add_argument("--stabilize", action=BoolFlag)
    sub.add_argument("--workers", type=int)
    sub.add_argument("--time-refinement", action=BoolFlag,
                     dest="time_refinement",
                     help="halve dt on one fixed mesh instead")
    sub.add_argument("--n-fixed", type=int, dest="n_fixed")
    sub.add_argument("--outdir")
    sub.set_defaults(func=cmd_converge)

    sub = subs.add_parser("mandel", help="consolidation benchmark profiles")
    sub.add_argument("--n", type=int)
    sub.add_argument("--family", choices=studies.FAMILIES)
    sub.add_argument("--dt-frac", type=float, dest="dt_frac",
                     help="time step as a fraction of the "
                          "characteristic time")
    sub.add_argument("--times", help="comma-separated sample times as "
                                     "fractions of the characteristic time")
    sub.add_argument("--n-terms", type=int, dest="n_terms")
    sub.add_argument("--seed", type=int)
    sub.add_argument("--lloyd-iters", type=int, dest="lloyd_iters")
    sub.add_argument("--outdir")
    sub.set_defaults(func=cmd_mandel)

    sub = subs.add_parser("cantilever",
                          help="stabilization indicator study")
    sub.add_argument("--families")
    sub.add_argument("--n", type=int)
    sub.add_argument("--dt", type=float)
    sub.add_argument("--seed", type=int)
    sub.add_argument("--lloyd-iters", type=int, dest="lloyd_iters")
    sub.add_argument("--vtk", action=BoolFlag)
    sub.add_argument("--outdir")
    sub.set_defaults(func=cmd_cantilever)

    sub = subs.add_parser("solver-bench",
                          help="GMRES iteration scaling study")
    sub.add_argument("--levels")
    sub.add_argument("--family", choices=studies.FAMILIES)
    sub.add_argument("--base", type=int)
    sub.add_argument("--dt", type=float)
    sub.add_argument("--stabilize", action=BoolFlag)
    sub.add_argument("--rtol", type=float)
    sub.add_argument("--seed", type=int)
    sub.add_argument("--lloyd-iters", type=int, dest="lloyd_iters")
    sub.add_argument("--outdir")
    sub.set_defaults(func=cmd_solver_bench)

    for sub_parser in subs.choices.values():
        sub_parser.add_argument("--config",
                                help="JSON file with option defaults")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args, parser)
    except (ValueError, MeshError, SolverError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
