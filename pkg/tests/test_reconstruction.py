import math

import numpy as np
import pytest

from homsurf.families import Example31Params, Example32Params, gen_cmc_control, gen_example31, gen_example32
from homsurf.fundamental import FundamentalField
from homsurf.grid import ConformalGrid
from homsurf.reconstruction import (
    FrameState,
    ReconstructionError,
    default_seed,
    extract_fundamental_data,
    integrate_surface,
    orthonormality_drift,
    path_independence_check,
    second_fundamental_form,
    shape_operator,
    verify_reconstruction,
)
from homsurf.space import AmbientChart, SpaceParams

UNIT = ConformalGrid.from_extent((0, 1), (0, 1), 1e-2)


def cylinder(k=-1.0, t=0.0, c=0.3, grid=UNIT):
    return gen_cmc_control(SpaceParams(k, t), c, grid)


@pytest.fixture(scope="module")
def ex32_patch():
    g = ConformalGrid.from_extent((0, 0.5), (0, 0.5), 2e-3)
    data = gen_example32(Example32Params(1, math.pi / 2 + 0.2, 1.0), g)
    chart = AmbientChart(data.space)
    return data, chart, integrate_surface(data, chart)


# ---------------------------------------------------------------- shape operator


def test_real_second_fundamental_form_matches_complex_identities():
    rng = np.random.default_rng(3)
    lam = rng.uniform(0.5, 2.0, 50)
    H = rng.normal(size=50)
    p = rng.normal(size=50) + 1j * rng.normal(size=50)
    II_ss, II_tt, II_st = second_fundamental_form(lam, H, p)
    # d_z = (d_s - i d_t) / 2
    II_zz = (II_ss - II_tt - 2j * II_st) / 4
    II_zzbar = (II_ss + II_tt) / 4
    np.testing.assert_allclose(II_zz, p, atol=1e-14)
    np.testing.assert_allclose(II_zzbar, lam * H / 2, atol=1e-14)


def test_shape_operator_trace_and_determinant():
    lam, H, p = 2.0, 0.3, 0.1 - 0.2j
    S = shape_operator(lam, H, p)
    assert np.trace(S) == pytest.approx(2 * H, abs=1e-15)
    assert np.linalg.det(S) == pytest.approx(H**2 - 4 * abs(p) ** 2 / lam**2, abs=1e-15)
    np.testing.assert_array_equal(S, S.T)


# ---------------------------------------------------------------- seed and frame


def test_frame_state_roundtrip():
    seed = default_seed(cylinder(), AmbientChart(SpaceParams(-1, 0)))
    again = FrameState.from_dict(seed.to_dict())
    np.testing.assert_array_equal(again.as_array(), seed.as_array())
    np.testing.assert_array_equal(FrameState.from_array(seed.as_array()).N, seed.N)


@pytest.mark.parametrize("data", [cylinder(), cylinder(-1, -0.3), cylinder(8, 1, 0.2)], ids=["H2xR", "PSL", "Berger"])
def test_default_seed_is_orthonormal_and_consistent(data):
    chart = AmbientChart(data.space)
    seed = default_seed(data, chart, point=(0.1, -0.2, 0.5))
    assert orthonormality_drift(chart, seed.as_array()[None])[0] <= 1e-14
    G = chart.metric_tensor(seed.point)
    xi = G[2]
    assert xi @ seed.N == pytest.approx(data.u[0, 0], abs=1e-14)
    A = 0.5 * math.sqrt(data.lam[0, 0]) * (xi @ seed.E1 - 1j * xi @ seed.E2)
    assert A == pytest.approx(data.A[0, 0], abs=1e-14)


# ---------------------------------------------------------------- round trip


def test_cylinder_round_trip():
    data = cylinder()
    mesh = integrate_surface(data, AmbientChart(data.space))
    rep = verify_reconstruction(mesh, data)
    for key in ("metric_rel", "u", "A", "h_z"):
        assert rep[key] <= 1e-3, key
    assert rep["drift"] <= 1e-6 and rep["events"] == 0
    assert mesh.points.shape == (101, 101, 3) and mesh.frames.shape == (101, 101, 3, 3)


def test_ex32_round_trip(ex32_patch):
    data, _, mesh = ex32_patch
    rep = verify_reconstruction(mesh, data)
    assert rep["u"] <= 1e-3 and rep["A"] <= 1e-3 and rep["metric_rel"] <= 1e-3
    assert rep["drift"] <= 1e-6 and rep["events"] == 0


def test_ex31_height_derivative_is_A():
    data = gen_example31(Example31Params(1.0, 0.5, -1), ConformalGrid.from_extent((0, 0.5), (0, 0.5), 2e-3))
    rep = verify_reconstruction(integrate_surface(data, AmbientChart(data.space)), data)
    assert rep["h_z"] <= 1e-3


def test_verify_is_invariant_under_z_translation():
    data = cylinder()
    chart = AmbientChart(data.space)
    mesh = integrate_surface(data, chart)
    before = verify_reconstruction(mesh, data)
    mesh.points = mesh.points + np.array([0.0, 0.0, 2.5])
    after = verify_reconstruction(mesh, data)
    assert set(after) == set(before)
    for key in before:
        assert after[key] == pytest.approx(before[key], rel=1e-6, abs=1e-12), key


def test_round_trip_error_shrinks_with_the_step():
    data = cylinder(-1, -0.3)
    chart = AmbientChart(data.space)
    errs = [verify_reconstruction(integrate_surface(data, chart, step=h), data)["metric_rel"] for h in (2e-2, 1e-2)]
    # the FD extraction of the metric is second order, which dominates here
    assert 3.2 <= errs[0] / errs[1] <= 4.8


# ---------------------------------------------------------------- congruence


def test_seeds_related_by_an_isometry_give_congruent_meshes(ex32_patch):
    data, chart, mesh = ex32_patch
    seed = default_seed(data, chart)
    th, dz = 0.7, 0.4
    R = np.array([[math.cos(th), -math.sin(th), 0], [math.sin(th), math.cos(th), 0], [0, 0, 1]])
    moved = FrameState(R @ seed.point + [0, 0, dz], R @ seed.E1, R @ seed.E2, R @ seed.N)
    other = integrate_surface(data, chart, moved)
    assert np.abs(other.points - (mesh.points @ R.T + [0, 0, dz])).max() <= 1e-6
    assert np.abs(other.frames - mesh.frames @ R.T).max() <= 1e-6


def test_recovered_data_are_constant_along_rows(ex32_patch):
    _, _, mesh = ex32_patch
    rec = extract_fundamental_data(mesh)
    assert mesh.recovered is rec
    # u and A come from the frame and are exact up to the integrator
    for name in ("u", "A"):
        v = getattr(rec, name)
        assert np.abs(v - v[:, :1]).max() <= 1e-8, name
    # lambda, H and p need FD of chart coordinates, which the rotation does not preserve
    for name in ("lam", "H", "p"):
        v = getattr(rec, name)
        assert np.abs(v - v[:, :1]).max() <= 1e-4, name


def test_extracted_data_match_the_input(ex32_patch):
    data, _, mesh = ex32_patch
    rec = extract_fundamental_data(mesh)
    step = mesh.grid.ds
    k = int(round(step / data.grid.ds))
    for name in ("lam", "u", "H", "p", "A"):
        ref = getattr(data, name)[::k, ::k]
        assert np.abs(getattr(rec, name) - ref)[1:-1, 1:-1].max() <= 1e-3, name


# ---------------------------------------------------------------- path independence


def test_cylinder_path_independence():
    # the Berger chart stretches far from the origin, so its patch is kept small
    half = ConformalGrid.from_extent((0, 0.5), (0, 0.5), 1e-2)
    for k, t, g in ((-1, 0, UNIT), (-1, -0.3, UNIT), (8, 1, half)):
        data = cylinder(k, t, 0.2, g)
        assert path_independence_check(data, AmbientChart(data.space))["discrepancy"] <= 1e-6


def test_path_discrepancy_scales_with_a_fault():
    data = cylinder()
    chart = AmbientChart(data.space)
    S, _ = data.grid.mesh()
    base = path_independence_check(data, chart)["discrepancy"]
    d = [path_independence_check(data.replace(H=data.H + eps * S, tol_alg=None), chart)["discrepancy"]
         for eps in (1e-3, 2e-3)]
    assert d[0] > 1e3 * base and d[0] > 1e-6
    assert d[1] / d[0] == pytest.approx(2.0, rel=1e-2)


def test_path_discrepancy_is_blind_to_faults_away_from_the_loop():
    # the check only sees the data on the two boundary paths
    data = cylinder()
    S, T = data.grid.mesh()
    bump = 1e-3 * np.exp(-((S - 0.5) ** 2 + (T - 0.5) ** 2) / 0.02)
    d = path_independence_check(data.replace(H=data.H + bump, tol_alg=None), AmbientChart(data.space))
    assert d["discrepancy"] <= 1e-8


# ---------------------------------------------------------------- errors


def test_chart_mismatch_is_rejected():
    with pytest.raises(ValueError, match="different spaces"):
        integrate_surface(cylinder(), AmbientChart(SpaceParams(-1, 0.5)))


def test_leaving_the_chart_is_reported():
    g = ConformalGrid.from_extent((0, 0.2), (0, 0.2), 1e-2)
    one = np.ones(g.shape)
    lam = 1e6
    data = FundamentalField(SpaceParams(-1, 0), g, lam * one, 0 * one, 0.3 * one, 0 * one, 0.5 * math.sqrt(lam) * one)
    with pytest.raises(ReconstructionError, match="chart domain"):
        integrate_surface(data, AmbientChart(data.space))


def test_mesh_step_coarser_than_data():
    data = cylinder(grid=ConformalGrid.from_extent((0, 0.3), (0, 0.2), 1e-3))
    mesh = integrate_surface(data, AmbientChart(data.space), step=5e-2)
    assert mesh.grid.shape == (7, 5)
    assert mesh.grid.ds == 5e-2
