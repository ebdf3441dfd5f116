import csv
import json
from types import SimpleNamespace

import numpy as np
import pytest

from homsurf.families import gen_cmc_control
from homsurf.fundamental import InvalidDataError, check_all
from homsurf.grid import ConformalGrid, ScalarField
from homsurf.io import (
    FormatError,
    export_mesh,
    field_from_dict,
    field_to_csv,
    field_to_dict,
    fundamental_from_dict,
    fundamental_to_dict,
    load_fundamental,
    load_json,
    load_mesh,
    save_fundamental,
    save_report,
)
from homsurf.reconstruction import SurfaceMesh, integrate_surface
from homsurf.space import AmbientChart, SpaceParams

GRID = ConformalGrid.from_extent((0, 0.2), (0, 0.1), 1e-2)


@pytest.fixture(scope="module")
def data():
    return gen_cmc_control(SpaceParams(-1, 0.5), 0.3, GRID)


@pytest.fixture(scope="module")
def mesh(data):
    return integrate_surface(data, AmbientChart(data.space))


def tiny_mesh():
    # a 2x2 mesh is below the FD minimum of ConformalGrid, but export only needs the layout
    s, t = np.meshgrid([0.0, 1.0], [0.0, 1.0], indexing="ij")
    grid = SimpleNamespace(shape=(2, 2), mesh=lambda: (s, t))
    points = np.stack([s, t, 0 * s], axis=-1)
    frames = np.broadcast_to(np.eye(3), (2, 2, 3, 3)).copy()
    return SurfaceMesh(grid, points, frames, AmbientChart(SpaceParams(-1, 0)))


# ---------------------------------------------------------------- fields


def test_field_roundtrip_real_and_complex():
    S, T = GRID.mesh()
    for values in (S * T + 1 / 3, np.exp(S + 1j * T)):
        f = ScalarField(GRID, values)
        back = field_from_dict(json.loads(json.dumps(field_to_dict(f))))
        np.testing.assert_array_equal(back.values, f.values)
        assert back.grid == GRID


def test_field_csv_layout(tmp_path):
    S, T = GRID.mesh()
    path = tmp_path / "f.csv"
    field_to_csv(ScalarField(GRID, S + 1j * T), path)
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["s", "t", "re", "im"]
    assert len(rows) == GRID.ns * GRID.nt + 1
    assert float(rows[-1][2]) == S[-1, -1] and float(rows[-1][3]) == T[-1, -1]


# ---------------------------------------------------------------- fundamental data


def test_fundamental_roundtrip_is_bit_exact(tmp_path, data):
    path = tmp_path / "d.json"
    save_fundamental(data, path)
    back = load_fundamental(path)
    assert back.space == data.space and back.grid == data.grid
    for name in ("lam", "u", "H", "p", "A"):
        np.testing.assert_array_equal(getattr(back, name), getattr(data, name))
    d = load_json(path)
    assert d["schema_version"] == 1 and d["kind"] == "fundamental_field"


def test_fundamental_bytes_are_deterministic(tmp_path, data):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    save_fundamental(data, a)
    save_fundamental(gen_cmc_control(SpaceParams(-1, 0.5), 0.3, GRID), b)
    assert a.read_bytes() == b.read_bytes()


def test_fundamental_reader_errors(data):
    d = fundamental_to_dict(data)
    with pytest.raises(FormatError, match="lacks keys"):
        fundamental_from_dict({k: v for k, v in d.items() if k != "H"})
    with pytest.raises(FormatError, match="p: expected"):
        fundamental_from_dict({**d, "p": d["p"][:-1]})
    bad = {**d, "A": [[0.1, 0.0]] * len(d["A"])}
    with pytest.raises(InvalidDataError, match="algebraic"):
        fundamental_from_dict(bad)
    assert fundamental_from_dict(bad, tol_alg=None).A[0, 0] == 0.1


def test_invalid_json_is_a_format_error(tmp_path):
    path = tmp_path / "x.json"
    path.write_text("{not json")
    with pytest.raises(FormatError, match="not valid JSON"):
        load_json(path)


def test_report_file(tmp_path, data):
    path = tmp_path / "r.json"
    save_report(check_all(data), path)
    rep = load_json(path)
    assert rep["passed"] and rep["schema_version"] == 1


# ---------------------------------------------------------------- meshes


def test_two_by_two_obj(tmp_path):
    path = export_mesh(tiny_mesh(), tmp_path / "m.obj")
    lines = path.read_text().splitlines()
    assert sum(ln.startswith("v ") for ln in lines) == 4
    assert sum(ln.startswith("vn ") for ln in lines) == 4
    faces = [ln for ln in lines if ln.startswith("f ")]
    assert faces == ["f 1//1 3//3 4//4", "f 1//1 4//4 2//2"]


def test_csv_row_count(tmp_path, mesh):
    path = export_mesh(mesh, tmp_path / "m.csv")
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["s", "t", "x", "y", "z", "nx", "ny", "nz"]
    assert len(rows) == mesh.grid.ns * mesh.grid.nt + 1
    assert len(list(csv.reader(export_mesh(tiny_mesh(), tmp_path / "t.csv").open()))) == 5


def test_mesh_json_roundtrip_is_bit_exact(tmp_path, mesh):
    path = export_mesh(mesh, tmp_path / "m.json")
    back = load_mesh(path)
    np.testing.assert_array_equal(back.points, mesh.points)
    np.testing.assert_array_equal(back.frames, mesh.frames)
    assert back.grid == mesh.grid and back.chart == mesh.chart


def test_obj_uses_seventeen_digits(tmp_path, mesh):
    lines = export_mesh(mesh, tmp_path / "m.obj").read_text().splitlines()
    v = [ln for ln in lines if ln.startswith("v ")]
    xyz = np.array([[float(c) for c in ln.split()[1:]] for ln in v])
    np.testing.assert_array_equal(xyz, mesh.points.reshape(-1, 3))


def test_mesh_export_is_deterministic(tmp_path, mesh):
    for fmt in ("obj", "csv", "json"):
        a = export_mesh(mesh, tmp_path / f"a.{fmt}").read_bytes()
        b = export_mesh(mesh, tmp_path / f"b.{fmt}").read_bytes()
        assert a == b, fmt


def test_explicit_format_overrides_suffix(tmp_path, mesh):
    path = export_mesh(mesh, tmp_path / "m.txt", fmt="csv")
    assert path.read_text().startswith("s,t,x")


def test_export_errors(tmp_path, mesh):
    with pytest.raises(FormatError, match="unknown mesh format"):
        export_mesh(mesh, tmp_path / "m.stl")
    with pytest.raises(OSError, match="does not exist"):
        export_mesh(mesh, tmp_path / "missing" / "m.obj")


def test_mesh_reader_rejects_mismatched_arrays(tmp_path, mesh):
    path = export_mesh(mesh, tmp_path / "m.json")
    d = load_json(path)
    d["points"] = d["points"][:-1]
    path.write_text(json.dumps(d))
    with pytest.raises(FormatError, match="do not match"):
        load_mesh(path)
