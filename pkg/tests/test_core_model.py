import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from csslab.core_model import (
    NABLA, SIGMA, SIGMA1, BoundaryDecayWarning, FieldPair, Grid1D, adjoint,
    assemble_potential, field_from_file, field_from_spec, frobenius_norm,
    potential_matrices, sigma1_conjugate, write_field_csv,
)

finite = st.floats(-1e3, 1e3, allow_nan=False)
cplx = st.builds(complex, finite, finite)


def _pair(u_vals, v_vals):
    g = Grid1D(-1.0, 1.0, 16)
    u = np.zeros(16, complex)
    v = np.zeros(16, complex)
    u[3], v[3] = u_vals, v_vals
    return FieldPair(g, u, v)


def test_grid_rejects_bad_sizes():
    with pytest.raises(ValueError):
        Grid1D(0.0, 1.0, 100)
    with pytest.raises(ValueError):
        Grid1D(0.0, 1.0, 8)
    with pytest.raises(ValueError):
        Grid1D(1.0, 1.0, 16)


def test_grid_is_periodic_right_end_excluded():
    g = Grid1D(-2.0, 2.0, 16)
    assert g.h == 0.25
    assert g.x[0] == -2.0 and g.x[-1] == pytest.approx(1.75)
    assert g.is_symmetric()
    assert not Grid1D(-2.0, 3.0, 16).is_symmetric()


def test_structure_constants_square_to_identity():
    assert np.array_equal(SIGMA @ SIGMA, np.eye(5))
    assert np.array_equal(SIGMA1 @ SIGMA1, np.eye(4))
    assert np.array_equal(NABLA @ NABLA, np.eye(5))
    assert SIGMA1.dtype.kind == "i"


def test_zero_potential():
    assert not np.any(assemble_potential(_pair(0, 0), 3))


def test_unit_u_potential_entries():
    U = assemble_potential(_pair(1.0, 0.0), 3)
    expected = np.zeros((5, 5), complex)
    expected[0, 4] = expected[1, 4] = 1
    expected[4, 0] = expected[4, 1] = -1
    assert np.array_equal(U, expected)


def test_potential_antihermitian_example():
    U = assemble_potential(_pair(1j, 2j), 3)
    assert np.array_equal(U + adjoint(U), np.zeros((5, 5)))


def test_potential_index_out_of_range():
    with pytest.raises(IndexError):
        assemble_potential(_pair(0, 0), 16)


@pytest.mark.parametrize("a, expected", [
    (np.eye(4), 2.0),
    (np.zeros((3, 3)), 0.0),
    (np.array([[3, 4], [0, 0]]), 5.0),
])
def test_frobenius_norm(a, expected):
    assert frobenius_norm(a) == expected


@given(cplx, cplx)
def test_potential_is_traceless_and_antihermitian(u, v):
    U = potential_matrices(u, v)
    assert np.trace(U) == 0
    assert np.array_equal(adjoint(U), -U)


@given(st.lists(cplx, min_size=16, max_size=16))
def test_sigma1_conjugation_involution(vals):
    a = np.array(vals).reshape(4, 4)
    assert np.array_equal(sigma1_conjugate(sigma1_conjugate(a)), a)


def test_boundary_flag_warns_but_constructs():
    g = Grid1D(-5.0, 5.0, 64)
    fp = FieldPair(g, np.ones(64), np.zeros(64))
    with pytest.warns(BoundaryDecayWarning):
        assert not fp.check_boundary()
    assert fp.edge_amplitude == 1.0


def test_field_is_read_only():
    fp = _pair(1, 0)
    with pytest.raises(ValueError):
        fp.u[0] = 2


def test_profiles_and_file_round_trip(tmp_path):
    g = Grid1D(-20.0, 20.0, 128)
    fp = field_from_spec(g, {"profile": "sech", "amplitude": 0.3, "carrier": 0.5},
                         {"profile": "gaussian", "amplitude": 0.1})
    assert fp.u[64] == pytest.approx(0.3)
    assert fp.v[64] == pytest.approx(0.1)
    path = tmp_path / "f.csv"
    write_field_csv(path, fp)
    back = field_from_file(path)
    assert back.grid.n == g.n and back.grid.x_min == g.x_min
    assert back.grid.x_max == pytest.approx(g.x_max)
    assert np.array_equal(back.u, fp.u) and np.array_equal(back.v, fp.v)


def test_unknown_profile():
    with pytest.raises(ValueError, match="unknown profile"):
        field_from_spec(Grid1D(-1.0, 1.0, 16), {"profile": "box"})


@settings(max_examples=25)
@given(st.floats(0.01, 2.0), st.floats(0.2, 3.0))
def test_mass_is_nonnegative(amp, width):
    g = Grid1D(-30.0, 30.0, 256)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        fp = field_from_spec(g, {"profile": "sech", "amplitude": amp, "width": width})
    assert fp.mass >= 0
