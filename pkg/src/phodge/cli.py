"""Batch command line front end: ``mesh``, ``spectrum``, ``bounds``, ``study``.

Exit codes: 0 success, 1 usage or configuration error, 2 non-convergence,
3 bound violation.

Every option may also be given in an INI file passed with ``--config``: keys
live in a section named after the subcommand (or ``[DEFAULT]``) and use the
long flag name without dashes, e.g. ``tol_rel = 1e-10``.  Flags win.
"""
from __future__ import annotations

import argparse
import configparser
import logging
import sys
import time
from pathlib import Path

from . import __version__
from .bounds import DEFAULT_SLACK, bound_report
from .mesh import MeshError, build_flat_torus, build_icosphere, load_off, save_off
from .records import SCHEMA, BOUND_SCHEMA, NonFiniteError, atomic_write, csv_text, read_json, write_json
from .spectrum import SolverOptions, continuation_study, solve_p, solve_p2

log = logging.getLogger("phodge")

EXIT_OK, EXIT_USAGE, EXIT_NONCONVERGED, EXIT_VIOLATED = 0, 1, 2, 3

GEOMETRY_H = {"icosphere": 1.0, "flat-torus": 0.0}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _add_geometry(p, level_default=2):
    p.add_argument("--geometry", choices=["icosphere", "flat-torus", "off-file"], default="icosphere")
    p.add_argument("--level", type=int, default=level_default, help="icosphere subdivision level")
    p.add_argument("--n", type=int, default=16, help="flat torus resolution")
    p.add_argument("--period", type=float, default=1.0, help="flat torus period")
    p.add_argument("--mesh", type=Path, help="OFF file for --geometry off-file")
    p.add_argument("--H", type=float, default=None, help="curvature-operator lower bound (off-file meshes)")
    p.add_argument("--allow-flagged", action="store_true", help="accept meshes that are not well-centered")


def _add_solver(p):
    d = SolverOptions()
    p.add_argument("--seed", type=int, default=d.seed)
    p.add_argument("--restarts", type=int, default=d.restarts)
    p.add_argument("--max-iters", type=int, default=d.max_iters)
    p.add_argument("--tol-rel", type=float, default=d.tol_rel)
    p.add_argument("--tol-grad", type=float, default=d.tol_grad)
    p.add_argument("--continuation-step", type=float, default=d.continuation_step)
    p.add_argument("--init", choices=["p2", "random"], default=d.init)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="phodge", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    m = sub.add_parser("mesh", help="generate or validate a mesh; write OFF + stats")
    _add_geometry(m)
    m.add_argument("--output", type=Path, default=Path("mesh.off"))
    m.add_argument("--config", type=Path)

    s = sub.add_parser("spectrum", help="compute lambda_1 and write a run record")
    _add_geometry(s)
    _add_solver(s)
    s.add_argument("--k", type=int, help="form degree (required, flag or config)")
    s.add_argument("--p", type=float, default=2.0)
    s.add_argument("--exact", action="store_true", help="use the p = 2 eigensolver")
    s.add_argument("--slack", type=float, default=DEFAULT_SLACK)
    s.add_argument("--output", type=Path, default=Path("spectrum.json"))
    s.add_argument("--history-csv", type=Path)
    s.add_argument("--eigenform", action="store_true", help="store the eigenform values in the record")
    s.add_argument("--config", type=Path)

    b = sub.add_parser("bounds", help="evaluate the lower bound and certify an eigenvalue")
    b.add_argument("--record", type=Path)
    b.add_argument("--n", type=int)
    b.add_argument("--k", type=int)
    b.add_argument("--p", type=float)
    b.add_argument("--H", type=float)
    b.add_argument("--lambda1", type=float)
    b.add_argument("--slack", type=float, default=DEFAULT_SLACK)
    b.add_argument("--output", type=Path, default=Path("bounds.json"))
    b.add_argument("--config", type=Path)

    st = sub.add_parser("study", help="refinement and p sweeps; CSV table + run records")
    st.add_argument("--geometry", choices=["icosphere", "flat-torus"], default="icosphere")
    st.add_argument("--levels", type=int, nargs="+", default=[2, 3, 4],
                    help="icosphere levels or flat torus resolutions")
    st.add_argument("--period", type=float, default=1.0)
    st.add_argument("--k", type=int, default=0)
    st.add_argument("--p", type=float, nargs="+", default=[2.0])
    st.add_argument("--slack", type=float, default=DEFAULT_SLACK)
    st.add_argument("--output-dir", type=Path, default=Path("study"))
    _add_solver(st)
    st.add_argument("--config", type=Path)
    return parser


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> argparse.Namespace:
    args = parser.parse_args(argv)
    if getattr(args, "config", None) is None:
        return args
    cp = configparser.ConfigParser()
    if not cp.read(args.config):
        raise UsageError(f"cannot read config file {args.config}")
    section = cp[args.command] if cp.has_section(args.command) else cp["DEFAULT"]
    sub = parser._subparsers._group_actions[0].choices[args.command]
    actions = {a.dest: a for a in sub._actions}
    defaults = {}
    for key, raw in section.items():
        dest = key.replace("-", "_")
        if dest not in actions or dest == "config":
            raise UsageError(f"unknown config key {key!r} for {args.command}")
        act = actions[dest]
        if act.nargs in ("+", "*"):
            defaults[dest] = [act.type(v) if act.type else v for v in raw.split()]
        elif act.const is True and act.nargs == 0:
            defaults[dest] = section.getboolean(key)
        else:
            defaults[dest] = act.type(raw) if act.type else raw
    sub.set_defaults(**defaults)
    return parser.parse_args(argv)


def _mesh_from_args(args):
    if args.geometry == "icosphere":
        mesh = build_icosphere(args.level)
        params = {"geometry": "icosphere", "level": args.level}
    elif args.geometry == "flat-torus":
        mesh = build_flat_torus(args.n, period=args.period)
        params = {"geometry": "flat-torus", "n": args.n, "period": args.period}
    else:
        if args.mesh is None:
            raise UsageError("--geometry off-file requires --mesh PATH")
        mesh = load_off(args.mesh)
        params = {"geometry": "off-file", "mesh": str(args.mesh)}
    if not mesh.well_centered and not getattr(args, "allow_flagged", False):
        raise UsageError("mesh is not well-centered; pass --allow-flagged to accept it")
    return mesh, params


def _curvature(args, geometry: str):
    H = getattr(args, "H", None)
    if H is not None:
        return float(H)
    return GEOMETRY_H.get(geometry)


def _solver_options(args) -> SolverOptions:
    return SolverOptions(seed=args.seed, restarts=args.restarts, max_iters=args.max_iters,
                         tol_rel=args.tol_rel, tol_grad=args.tol_grad,
                         continuation_step=args.continuation_step, init=args.init)


def cmd_mesh(args, argv) -> int:
    mesh, params = _mesh_from_args(args)
    save_off(mesh, args.output)
    stats = mesh.stats()
    stats.update({"schema": "phodge.meshstats/1", "fingerprint": mesh.fingerprint(),
                  "parameters": params, "version": __version__})
    write_json(args.output.with_suffix(".stats.json"), stats)
    log.info("wrote %s (V=%d E=%d F=%d, chi=%d)", args.output, *mesh.counts, mesh.euler_characteristic)
    return EXIT_OK


def _check_p(p):
    if not p >= 2:
        raise UsageError(f"p must be >= 2 (got {p})")


def cmd_spectrum(args, argv) -> int:
    _check_p(args.p)
    if args.k is None:
        raise UsageError("--k is required")
    mesh, params = _mesh_from_args(args)
    if not 0 <= args.k <= mesh.dim:
        raise UsageError(f"k must lie in 0..{mesh.dim}")
    opts = _solver_options(args)
    t0 = time.perf_counter()
    if args.exact:
        if args.p != 2:
            raise UsageError("--exact is only available at p = 2")
        result = solve_p2(mesh, args.k)
    else:
        result = solve_p(mesh, args.k, args.p, opts)
    elapsed = time.perf_counter() - t0
    results = {"spectrum": result.to_dict(include_eigenform=args.eigenform)}
    H = _curvature(args, params["geometry"])
    if H is not None and 1 <= args.k <= mesh.dim - 1:
        results["bound"] = bound_report(mesh.dim, args.k, args.p, H, result.lambda1, args.slack).to_dict()
    config = {
        "mesh": params, "k": args.k, "p": args.p, "exact": args.exact, "H": H,
        "slack": args.slack, "solver": opts.to_dict(),
    }
    record = {
        "schema": SCHEMA, "command": argv, "config": config,
        "mesh": {"fingerprint": mesh.fingerprint(), "dim": mesh.dim, "counts": list(mesh.counts)},
        "results": results, "duration_seconds": elapsed, "version": __version__,
    }
    write_json(args.output, record)
    if args.history_csv is not None:
        atomic_write(args.history_csv, csv_text(["iteration", "quotient"], enumerate(result.quotient_history)))
    log.info("lambda1 = %.12g (converged=%s)", result.lambda1, result.converged)
    return EXIT_OK if result.converged else EXIT_NONCONVERGED


def cmd_bounds(args, argv) -> int:
    n, k, p, H, lam = args.n, args.k, args.p, args.H, args.lambda1
    source = "inline"
    if args.record is not None:
        rec = read_json(args.record)
        if rec.get("schema") != SCHEMA:
            raise UsageError(f"{args.record} is not a run record")
        cfg = rec["config"]
        n = rec["mesh"]["dim"] if n is None else n
        k = cfg["k"] if k is None else k
        p = cfg["p"] if p is None else p
        H = cfg.get("H") if H is None else H
        lam = rec["results"]["spectrum"]["lambda1"] if lam is None else lam
        if not rec["results"]["spectrum"]["converged"]:
            raise UsageError("record holds an unconverged result")
        source = str(args.record)
    missing = [name for name, v in (("n", n), ("k", k), ("p", p), ("H", H)) if v is None]
    if missing:
        raise UsageError(f"missing bound parameters: {', '.join(missing)}")
    _check_p(p)
    try:
        report = bound_report(int(n), int(k), float(p), float(H), lam, args.slack)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    out = report.to_dict()
    out.update({"schema": BOUND_SCHEMA, "source": source, "version": __version__})
    write_json(args.output, out)
    if report.satisfied is False:
        log.warning("bound violated: lambda1=%s < %s", lam, report.bound_value)
        return EXIT_VIOLATED
    return EXIT_OK


def _richardson(h_c, lam_c, h_f, lam_f):
    # second-order extrapolation in the mesh size
    return lam_f + (lam_f - lam_c) * h_f ** 2 / (h_c ** 2 - h_f ** 2)


STUDY_COLUMNS = ["level", "h_max", "k", "p", "lambda1", "bound", "margin", "converged"]


def cmd_study(args, argv) -> int:
    for p in args.p:
        _check_p(p)
    p_req = sorted(set(float(p) for p in args.p))
    p_chain = p_req if p_req[0] == 2.0 else [2.0] + p_req
    opts = _solver_options(args)
    out_dir = args.output_dir
    rows, timing_rows = [], []
    per_p: dict[float, list] = {p: [] for p in p_req}
    status = EXIT_OK
    H = GEOMETRY_H[args.geometry]
    for level in args.levels:
        if args.geometry == "icosphere":
            mesh = build_icosphere(level)
            params = {"geometry": "icosphere", "level": level}
        else:
            mesh = build_flat_torus(level, period=args.period)
            params = {"geometry": "flat-torus", "n": level, "period": args.period}
        if not mesh.well_centered:
            raise UsageError(f"level {level}: mesh is not well-centered")
        if not 0 <= args.k <= mesh.dim:
            raise UsageError(f"k must lie in 0..{mesh.dim}")
        t0 = time.perf_counter()
        results = continuation_study(mesh, args.k, p_chain, opts)
        elapsed = time.perf_counter() - t0
        for res in results:
            if res.p not in per_p:
                continue
            if 1 <= args.k <= mesh.dim - 1:
                rep = bound_report(mesh.dim, args.k, res.p, H, res.lambda1, args.slack)
                bound, margin, ok = rep.bound_value, rep.margin, rep.satisfied
            else:
                bound, margin, ok = None, None, True
            rows.append([level, mesh.h_max(), args.k, res.p, res.lambda1, bound, margin, res.converged])
            per_p[res.p].append((mesh.h_max(), res.lambda1, res.converged))
            if not res.converged:
                status = EXIT_NONCONVERGED
            elif not ok and status == EXIT_OK:
                status = EXIT_VIOLATED
            record = {
                "schema": SCHEMA, "command": argv,
                "config": {"mesh": params, "k": args.k, "p": res.p, "H": H, "slack": args.slack,
                           "solver": opts.to_dict(), "p_chain": p_chain},
                "mesh": {"fingerprint": mesh.fingerprint(), "dim": mesh.dim, "counts": list(mesh.counts)},
                "results": {"spectrum": res.to_dict()},
                "duration_seconds": elapsed, "version": __version__,
            }
            write_json(out_dir / "records" / f"level{level}_p{res.p:g}.json", record)
        timing_rows.append([level, elapsed])
    for p, entries in per_p.items():
        if len(entries) >= 2:
            (h_c, l_c, c_c), (h_f, l_f, c_f) = entries[-2], entries[-1]
            if h_c > h_f:
                lam = _richardson(h_c, l_c, h_f, l_f)
                if 1 <= args.k <= mesh.dim - 1:
                    bound = bound_report(mesh.dim, args.k, p, H, lam, args.slack)
                    b, mg = bound.bound_value, bound.margin
                else:
                    b, mg = None, None
                rows.append(["richardson", 0.0, args.k, p, lam, b, mg, c_c and c_f])
    atomic_write(out_dir / "study.csv", csv_text(STUDY_COLUMNS, rows))
    atomic_write(out_dir / "timings.csv", csv_text(["level", "seconds"], timing_rows))
    return status


COMMANDS = {"mesh": cmd_mesh, "spectrum": cmd_spectrum, "bounds": cmd_bounds, "study": cmd_study}


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(message)s")
        return COMMANDS[args.command](args, argv)
    except UsageError as exc:
        print(f"phodge: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (MeshError, NonFiniteError, ValueError, OSError) as exc:
        print(f"phodge: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
