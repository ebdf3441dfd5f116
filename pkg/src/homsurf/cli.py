"""Command-line entry point ``homsurf``.

Exit codes: 0 on success, 1 when data fail a residual or round-trip check,
2 on invalid input (bad parameters, unreadable files, violated invariants).
Output files are deterministic; timestamps only ever go to the optional
``--log`` sidecar.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import os
import sys
from pathlib import Path

from threadpoolctl import threadpool_limits

from . import io
from .differentials import differential_norms, feasibility_audit
from .families import FAMILY_PARAMS, generate
from .fundamental import SCHEMA_VERSION, ToleranceProfile, check_all, flip_orientation
from .grid import ConformalGrid
from .reconstruction import (
    FrameState,
    ReconstructionError,
    integrate_surface,
    verify_reconstruction,
)
from .space import AmbientChart, SpaceParams

log = logging.getLogger("homsurf")

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2
VERIFY_TOL = 1e-3


class InputError(ValueError):
    pass


def _read_json(path: str):
    if not Path(path).is_file():
        raise InputError(f"input file {path} does not exist")
    return io.load_json(path)


def _check_output(path: str) -> Path:
    out = Path(path)
    if not out.parent.exists():
        raise InputError(f"output directory {out.parent} does not exist for {path}")
    return out


def _grid_from_json(d: dict) -> ConformalGrid:
    """Accept either the stored grid layout or an extent form with s_range/t_range."""
    if "s_range" in d:
        return ConformalGrid.from_extent(d["s_range"], d["t_range"], d["ds"], d.get("dt"))
    try:
        return ConformalGrid.from_dict(d)
    except KeyError as exc:
        raise InputError(f"grid JSON lacks key {exc}") from None


def _params_from_json(family: str, d: dict):
    cls = FAMILY_PARAMS[family]
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(d) - names)
    if unknown:
        raise InputError(f"unknown {family} parameter(s) {unknown}; allowed: {sorted(names)}")
    try:
        return cls(**d)
    except TypeError as exc:
        raise InputError(f"{family} parameters: {exc}") from None


# ---------------------------------------------------------------- subcommands


def cmd_gen(args) -> int:
    params = _params_from_json(args.family, _read_json(args.params) if args.params else {})
    grid = _grid_from_json(_read_json(args.grid))
    out = _check_output(args.out)
    data = generate(args.family, params, grid)
    io.save_fundamental(data, out)
    print(f"wrote {args.family} field on a {grid.ns}x{grid.nt} grid to {out}")
    return EXIT_OK


def cmd_check(args) -> int:
    data = io.load_fundamental(args.data, tol_alg=None)
    if args.flip_orientation:
        data = flip_orientation(data)
    profile = None
    if args.tol_profile:
        raw = _read_json(args.tol_profile)
        profile = ToleranceProfile.uniform(raw) if isinstance(raw, (int, float)) else ToleranceProfile.from_dict(raw)
    report = check_all(data, profile)
    if args.differentials:
        report.extra.update(differential_norms(data))
    if args.report:
        io.save_report(report, _check_output(args.report))
    print(report.summary())
    if not report.passed:
        print(f"failing equations: {', '.join(report.failing)}")
        return EXIT_FAIL
    return EXIT_OK


def cmd_audit(args) -> int:
    verdict = feasibility_audit(SpaceParams(args.kappa, args.tau))
    print(f"verdict: {verdict.tag.value}")
    if verdict.allowed_H_interval is not None:
        lo, hi = verdict.allowed_H_interval
        print(f"allowed H interval: [{lo:.17g}, {hi:.17g}]")
    print(f"clause: {verdict.citation}")
    if args.out:
        io.dump_json({"schema_version": SCHEMA_VERSION, "kind": "feasibility_verdict",
                      "space": {"kappa": args.kappa, "tau": args.tau}, **verdict.to_dict()},
                     _check_output(args.out))
    return EXIT_OK


def cmd_reconstruct(args) -> int:
    data = io.load_fundamental(args.data)
    out = _check_output(args.out)
    chart = AmbientChart(data.space)
    seed = None if args.seed == "default" else FrameState.from_dict(_read_json(args.seed))
    mesh = integrate_surface(data, chart, seed, step=args.step)
    io.export_mesh(mesh, out)
    print(f"wrote {mesh.grid.ns}x{mesh.grid.nt} mesh to {out} ({len(mesh.events)} re-orthonormalization events)")
    if not args.verify:
        return EXIT_OK
    rep = verify_reconstruction(mesh, data)
    checked = {k: v for k, v in rep.items() if k in ("metric_rel", "u", "A", "h_z")}
    failing = sorted(k for k, v in checked.items() if v > VERIFY_TOL)
    for k, v in rep.items():
        print(f"{k:10s} {v:.3e}")
    if args.report:
        io.dump_json({"schema_version": SCHEMA_VERSION, "kind": "reconstruction_report",
                      "step": args.step, "tolerance": VERIFY_TOL, "deviations": rep,
                      "passed": not failing, "failing": failing}, _check_output(args.report))
    if failing:
        print(f"round trip exceeds {VERIFY_TOL:g} in: {', '.join(failing)}")
        return EXIT_FAIL
    return EXIT_OK


def cmd_export(args) -> int:
    out = _check_output(args.out)
    if args.mesh:
        io.export_mesh(io.load_mesh(args.mesh), out, args.format)
    else:
        data = io.load_fundamental(args.data, tol_alg=None)
        name = {"lambda": "lam"}.get(args.field, args.field)
        if name not in ("lam", "u", "H", "p", "A"):
            raise InputError(f"unknown field {args.field!r}; choose lambda, u, H, p or A")
        io.field_to_csv(data.field(name), out)
    print(f"wrote {out}")
    return EXIT_OK


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="homsurf",
        description="Generate, check and reconstruct surfaces in the homogeneous spaces E(kappa, tau).",
        epilog="Exit codes: 0 success, 1 residual or round-trip failure, 2 input error. "
        "HOMSURF_THREADS caps the number of BLAS/OpenMP threads.",
    )
    ap.add_argument("--log", metavar="FILE", help="append a timestamped log to FILE")
    ap.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate fundamental data for a family")
    g.add_argument("--family", required=True, choices=sorted(FAMILY_PARAMS), help="which family to generate")
    g.add_argument("--params", metavar="JSON", help="family parameters; keys mirror the parameter type")
    g.add_argument("--grid", metavar="JSON", required=True,
                   help="grid as {s0, t0, ds, dt, ns, nt} or {s_range, t_range, ds[, dt]}")
    g.add_argument("--out", metavar="JSON", required=True, help="where to write the field")
    g.set_defaults(func=cmd_gen)

    c = sub.add_parser("check", help="evaluate the integrability residuals of a field")
    c.add_argument("--data", metavar="JSON", required=True, help="fundamental field file")
    c.add_argument("--tol-profile", metavar="JSON",
                   help="tolerance profile object, or a single number applied to every equation")
    c.add_argument("--report", metavar="JSON", help="write the residual report here")
    c.add_argument("--differentials", action="store_true", help="add Q and P holomorphy norms to the report")
    c.add_argument("--flip-orientation", action="store_true", help="check the oppositely oriented data instead")
    c.set_defaults(func=cmd_check)

    a = sub.add_parser("audit", help="feasibility of non-CMC surfaces with holomorphic Q")
    a.add_argument("--kappa", type=float, required=True, help="base curvature")
    a.add_argument("--tau", type=float, required=True, help="bundle curvature")
    a.add_argument("--out", metavar="JSON", help="also write the verdict as JSON")
    a.set_defaults(func=cmd_audit)

    r = sub.add_parser("reconstruct", help="integrate the frame equations to a surface mesh")
    r.add_argument("--data", metavar="JSON", required=True, help="fundamental field file")
    r.add_argument("--seed", default="default", metavar="JSON|default",
                   help="initial frame {point, E1, E2, N}, or 'default' for the gauge-fixed seed at the origin")
    r.add_argument("--step", type=float, default=1e-2, help="RK4 step and mesh spacing (default 1e-2)")
    r.add_argument("--out", required=True, help="mesh file; the suffix .obj, .csv or .json picks the format")
    r.add_argument("--verify", action="store_true",
                   help=f"compare the mesh with the data; exit 1 if any deviation exceeds {VERIFY_TOL:g}")
    r.add_argument("--report", metavar="JSON", help="with --verify, write the deviations here")
    r.set_defaults(func=cmd_reconstruct)

    e = sub.add_parser("export", help="convert a mesh JSON, or one data field to CSV")
    src = e.add_mutually_exclusive_group(required=True)
    src.add_argument("--mesh", metavar="JSON", help="mesh written by reconstruct")
    src.add_argument("--data", metavar="JSON", help="fundamental field file")
    e.add_argument("--field", default="H", help="with --data: lambda, u, H, p or A (default H)")
    e.add_argument("--format", choices=io.MESH_FORMATS, help="with --mesh: output format (default from suffix)")
    e.add_argument("--out", required=True, help="output path")
    e.set_defaults(func=cmd_export)
    return ap


def _threads() -> int | None:
    raw = os.environ.get("HOMSURF_THREADS")
    if raw is None or raw == "":
        return None
    try:
        n = int(raw)
    except ValueError:
        raise InputError(f"HOMSURF_THREADS must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise InputError(f"HOMSURF_THREADS must be a positive integer, got {n}")
    return n


def _setup_logging(args) -> None:
    handlers: list[logging.Handler] = []
    if args.verbose:
        handlers.append(logging.StreamHandler(sys.stderr))
    if args.log:
        fh = logging.FileHandler(args.log)
        fh.setFormatter(logging.Formatter("%(asctime)s %(levelname)s %(name)s: %(message)s"))
        handlers.append(fh)
    root = logging.getLogger("homsurf")
    root.handlers[:] = handlers
    root.setLevel(logging.INFO if handlers else logging.WARNING)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _setup_logging(args)
    try:
        with threadpool_limits(limits=_threads()):
            return args.func(args)
    except ReconstructionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except (ValueError, KeyError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
