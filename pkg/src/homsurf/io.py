"""JSON, CSV and OBJ serialization.

Floats are written with ``repr``-exact precision (17 significant digits),
so a write followed by a read reproduces every value bit for bit, and the
same object always produces the same bytes.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .fundamental import SCHEMA_VERSION, FundamentalField, ResidualReport
from .grid import ConformalGrid, ScalarField
from .reconstruction import SurfaceMesh
from .space import AmbientChart, SpaceParams

FMT = "%.17g"


class FormatError(ValueError):
    """A file does not follow the expected layout."""


def _complex_rows(a: np.ndarray) -> list:
    return [[float(z.real), float(z.imag)] for z in a.ravel()]


def _real_rows(a: np.ndarray) -> list:
    return [float(x) for x in a.ravel()]


def _read_values(raw, shape, complex_: bool, name: str) -> np.ndarray:
    arr = np.asarray(raw, dtype=float)
    n = shape[0] * shape[1]
    if complex_:
        if arr.shape != (n, 2):
            raise FormatError(f"{name}: expected {n} [re, im] pairs, got array of shape {arr.shape}")
        return (arr[:, 0] + 1j * arr[:, 1]).reshape(shape)
    if arr.shape != (n,):
        raise FormatError(f"{name}: expected {n} floats, got array of shape {arr.shape}")
    return arr.reshape(shape)


def dump_json(obj, path) -> None:
    """Write with sorted keys and a trailing newline, so output is reproducible."""
    text = json.dumps(obj, indent=1, sort_keys=True, allow_nan=False)
    Path(path).write_text(text + "\n")


def load_json(path):
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: not valid JSON ({exc})") from exc


# ---------------------------------------------------------------- scalar fields


def field_to_dict(f: ScalarField) -> dict:
    rows = _complex_rows(f.values) if f.is_complex else _real_rows(f.values)
    return {"grid": f.grid.to_dict(), "values": rows}


def field_from_dict(d: dict) -> ScalarField:
    grid = ConformalGrid.from_dict(d["grid"])
    values = d["values"]
    complex_ = bool(values) and isinstance(values[0], list)
    return ScalarField(grid, _read_values(values, grid.shape, complex_, "values"))


def field_to_csv(f: ScalarField, path) -> None:
    S, T = f.grid.mesh()
    vals = np.asarray(f.values, dtype=complex)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["s", "t", "re", "im"])
        for s, t, v in zip(S.ravel(), T.ravel(), vals.ravel()):
            w.writerow([FMT % s, FMT % t, FMT % v.real, FMT % v.imag])


# ---------------------------------------------------------------- fundamental data


def fundamental_to_dict(data: FundamentalField) -> dict:
    out = {
        "schema_version": SCHEMA_VERSION,
        "kind": "fundamental_field",
        "space": data.space.to_dict(),
        "grid": data.grid.to_dict(),
        "lambda": _real_rows(data.lam),
        "u": _real_rows(data.u),
        "H": _real_rows(data.H),
        "p": _complex_rows(data.p),
        "A": _complex_rows(data.A),
    }
    extras = {k: _real_rows(np.asarray(v)) for k, v in data.extras.items()
              if np.shape(v) == data.grid.shape and not np.iscomplexobj(v)}
    if extras:
        out["extras"] = extras
    return out


def fundamental_from_dict(d: dict, tol_alg: float | None = 1e-8) -> FundamentalField:
    missing = [k for k in ("space", "grid", "lambda", "u", "H", "p", "A") if k not in d]
    if missing:
        raise FormatError(f"fundamental field JSON lacks keys {missing}")
    space = SpaceParams.from_dict(d["space"])
    grid = ConformalGrid.from_dict(d["grid"])
    shape = grid.shape
    extras = {k: _read_values(v, shape, False, f"extras.{k}") for k, v in d.get("extras", {}).items()}
    return FundamentalField(
        space,
        grid,
        _read_values(d["lambda"], shape, False, "lambda"),
        _read_values(d["u"], shape, False, "u"),
        _read_values(d["H"], shape, False, "H"),
        _read_values(d["p"], shape, True, "p"),
        _read_values(d["A"], shape, True, "A"),
        tol_alg=tol_alg,
        extras=extras,
    )


def save_fundamental(data: FundamentalField, path) -> None:
    dump_json(fundamental_to_dict(data), path)


def load_fundamental(path, tol_alg: float | None = 1e-8) -> FundamentalField:
    return fundamental_from_dict(load_json(path), tol_alg)


def save_report(report: ResidualReport, path) -> None:
    dump_json(report.to_dict(), path)


# ---------------------------------------------------------------- meshes


def mesh_to_dict(mesh: SurfaceMesh) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "surface_mesh",
        "space": mesh.chart.params.to_dict(),
        "grid": mesh.grid.to_dict(),
        "points": mesh.points.reshape(-1, 3).tolist(),
        "frames": mesh.frames.reshape(-1, 9).tolist(),
        "events": list(mesh.events),
    }


def mesh_from_dict(d: dict) -> SurfaceMesh:
    grid = ConformalGrid.from_dict(d["grid"])
    ns, nt = grid.shape
    points = np.asarray(d["points"], dtype=float)
    frames = np.asarray(d["frames"], dtype=float)
    if points.shape != (ns * nt, 3) or frames.shape != (ns * nt, 9):
        raise FormatError(f"mesh arrays do not match the {ns}x{nt} grid")
    chart = AmbientChart(SpaceParams.from_dict(d["space"]))
    return SurfaceMesh(grid, points.reshape(ns, nt, 3), frames.reshape(ns, nt, 3, 3), chart,
                       list(d.get("events", [])))


def _write_obj(mesh: SurfaceMesh, path) -> None:
    ns, nt = mesh.grid.shape
    idx = np.arange(ns * nt).reshape(ns, nt) + 1  # OBJ is 1-based
    lines = ["# homsurf mesh, chart coordinates (x, y, z)"]
    lines += ["v " + " ".join(FMT % c for c in v) for v in mesh.points.reshape(-1, 3)]
    lines += ["vn " + " ".join(FMT % c for c in n) for n in mesh.normals.reshape(-1, 3)]
    for i in range(ns - 1):
        for j in range(nt - 1):
            a, b, c, d = idx[i, j], idx[i + 1, j], idx[i + 1, j + 1], idx[i, j + 1]
            lines.append(f"f {a}//{a} {b}//{b} {c}//{c}")
            lines.append(f"f {a}//{a} {c}//{c} {d}//{d}")
    Path(path).write_text("\n".join(lines) + "\n")


def _write_csv(mesh: SurfaceMesh, path) -> None:
    S, T = mesh.grid.mesh()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["s", "t", "x", "y", "z", "nx", "ny", "nz"])
        for s, t, p, n in zip(S.ravel(), T.ravel(), mesh.points.reshape(-1, 3), mesh.normals.reshape(-1, 3)):
            w.writerow([FMT % s, FMT % t, *(FMT % c for c in p), *(FMT % c for c in n)])


MESH_FORMATS = ("obj", "csv", "json")


def export_mesh(mesh: SurfaceMesh, path, fmt: str | None = None) -> Path:
    """Write ``mesh`` as OBJ, CSV or JSON; the format defaults to the file suffix."""
    path = Path(path)
    fmt = (fmt or path.suffix.lstrip(".")).lower()
    if fmt not in MESH_FORMATS:
        raise FormatError(f"unknown mesh format {fmt!r}; expected one of {MESH_FORMATS}")
    if not path.parent.exists():
        raise OSError(f"cannot write {path}: directory {path.parent} does not exist")
    if fmt == "obj":
        _write_obj(mesh, path)
    elif fmt == "csv":
        _write_csv(mesh, path)
    else:
        dump_json(mesh_to_dict(mesh), path)
    return path


def load_mesh(path) -> SurfaceMesh:
    return mesh_from_dict(load_json(path))
