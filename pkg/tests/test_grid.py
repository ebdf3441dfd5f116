import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from homsurf.grid import ConformalGrid, ScalarField, d_s, d_t, d_z, d_zbar, residual_norm


def unit_grid(h=1e-2):
    return ConformalGrid.from_extent((0.0, 1.0), (0.0, 1.0), h)


def field_of(grid, fn):
    return ScalarField(grid, fn(grid.z()))


def interior_err(f: ScalarField, exact) -> float:
    return float(np.abs(f.values - exact)[f.valid].max())


def test_grid_rejects_bad_steps_and_sizes():
    with pytest.raises(ValueError, match="positive"):
        ConformalGrid(0, 0, 0.0, 0.1, 10, 10)
    with pytest.raises(ValueError, match="at least 5"):
        ConformalGrid(0, 0, 0.1, 0.1, 4, 10)


def test_grid_nodes_and_roundtrip():
    g = ConformalGrid(1.0, -2.0, 0.5, 0.25, 5, 7)
    assert g.z()[3, 4] == pytest.approx(complex(2.5, -1.0))
    assert ConformalGrid.from_dict(g.to_dict()) == g
    fine = g.refined(2)
    assert fine.shape == (9, 13)
    assert fine.s[-1] == pytest.approx(g.s[-1])


def test_masks_erode_one_ring_per_derivative():
    g = unit_grid(0.1)
    f = field_of(g, lambda z: z)
    once = d_z(f)
    twice = d_zbar(once)
    assert not once.valid[0].any() and once.valid[1:-1, 1:-1].all()
    assert not twice.valid[1].any() and twice.valid[2:-2, 2:-2].all()


def test_dz_of_constant_vanishes():
    f = ScalarField(unit_grid(), np.full((101, 101), 3.0 - 2.0j))
    assert residual_norm(d_z(f))["max"] == 0.0


def test_dz_of_z_is_one_and_dzbar_of_z_is_zero():
    f = field_of(unit_grid(), lambda z: z)
    assert interior_err(d_z(f), 1.0) <= 1e-12
    assert interior_err(d_zbar(f), 0.0) <= 1e-12


def test_dzbar_of_zbar_is_one():
    f = field_of(unit_grid(), np.conj)
    assert interior_err(d_zbar(f), 1.0) <= 1e-12


def test_dz_of_z_squared():
    g = unit_grid()
    f = field_of(g, lambda z: z**2)
    assert interior_err(d_z(f), 2 * g.z()) <= 1e-12


def test_dzbar_of_modulus_squared():
    g = unit_grid()
    f = field_of(g, lambda z: np.abs(z) ** 2)
    assert interior_err(d_zbar(f), g.z()) <= 1e-12


def test_real_partials_on_anisotropic_grid():
    g = ConformalGrid(0.0, 0.0, 0.01, 0.02, 30, 20)
    S, T = g.mesh()
    f = ScalarField(g, 3 * S - 5 * T)
    assert interior_err(d_s(f), 3.0) <= 1e-12
    assert interior_err(d_t(f), -5.0) <= 1e-12


@pytest.mark.parametrize("coeffs", [(1, 0, 0), (0.3j, -1, 2 + 1j)])
def test_holomorphic_quadratic_has_vanishing_dzbar(coeffs):
    f = field_of(unit_grid(), lambda z: np.polyval(coeffs, z))
    assert residual_norm(d_zbar(f))["max"] <= 1e-10


@pytest.mark.parametrize("a3", [1.0, 0.3 - 2j])
def test_dzbar_of_cubic_is_the_truncation_term(a3):
    # central differences leave h^2 f'''/6 = a3 h^2 in d_zbar of a holomorphic cubic
    g = unit_grid()
    f = field_of(g, lambda z: a3 * z**3 - z**2 + 4)
    assert interior_err(d_zbar(f), a3 * g.ds**2) <= 1e-10


def test_dzbar_converges_at_second_order_on_exp():
    errs = [residual_norm(d_zbar(field_of(unit_grid(h), np.exp)))["max"] for h in (2e-2, 1e-2)]
    assert 3.5 <= errs[0] / errs[1] <= 4.5


def test_dz_of_holomorphic_field_cancels_to_fourth_order():
    # on a square grid the h^2 errors of d_s and d_t cancel in d_z of a holomorphic field
    errs = []
    for h in (2e-2, 1e-2):
        g = unit_grid(h)
        errs.append(interior_err(d_z(field_of(g, np.exp)), np.exp(g.z())))
    assert 14 <= errs[0] / errs[1] <= 18


def test_dz_converges_at_second_order_on_a_generic_field():
    errs = []
    for h in (2e-2, 1e-2):
        g = unit_grid(h)
        S, T = g.mesh()
        f = ScalarField(g, np.exp(S) * np.sin(2 * T))
        exact = 0.5 * (np.exp(S) * np.sin(2 * T) - 2j * np.exp(S) * np.cos(2 * T))
        errs.append(interior_err(d_z(f), exact))
    assert 3.5 <= errs[0] / errs[1] <= 4.5


def test_residual_norm_examples():
    g = ConformalGrid(0, 0, 1, 1, 5, 5)
    zero = ScalarField(g, np.zeros((5, 5)))
    assert residual_norm(zero) == {"max": 0.0, "l2": 0.0}
    spike = np.zeros((5, 5))
    spike[2, 2] = 3.0
    assert residual_norm(ScalarField(g, spike)) == pytest.approx({"max": 3.0, "l2": 1.0})
    assert residual_norm(ScalarField(g, np.full((5, 5), 1j))) == pytest.approx({"max": 1.0, "l2": 1.0})


def test_residual_norm_ignores_the_boundary():
    g = ConformalGrid(0, 0, 1, 1, 5, 5)
    v = np.zeros((5, 5))
    v[0, 0] = v[-1, 2] = 100.0
    assert residual_norm(ScalarField(g, v))["max"] == 0.0


def test_fields_on_different_grids_do_not_mix():
    a = ScalarField(unit_grid(0.1), np.zeros((11, 11)))
    b = ScalarField(ConformalGrid(1, 0, 0.1, 0.1, 11, 11), np.zeros((11, 11)))
    with pytest.raises(ValueError, match="different grids"):
        a + b


small_grid = ConformalGrid(-0.3, 0.1, 0.05, 0.07, 8, 9)
values = st.lists(
    st.complex_numbers(max_magnitude=1e3, allow_nan=False, allow_infinity=False),
    min_size=72, max_size=72,
).map(lambda v: ScalarField(small_grid, np.array(v).reshape(8, 9)))
scalars = st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False)


@settings(max_examples=50, deadline=None)
@given(values, values, scalars, scalars)
def test_wirtinger_operators_are_linear(f, g, a, b):
    for op in (d_z, d_zbar):
        lhs = op(a * f + b * g).values
        rhs = (a * op(f) + b * op(g)).values
        scale = 1 + np.abs(a) * np.abs(f.values).max() + np.abs(b) * np.abs(g.values).max()
        assert np.abs(lhs - rhs).max() <= 1e-13 * scale / small_grid.ds


@settings(max_examples=50, deadline=None)
@given(values)
def test_conjugation_identity_is_exact(f):
    assert np.array_equal(d_zbar(f).values, d_z(f.conj()).conj().values)
