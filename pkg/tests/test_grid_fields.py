import numpy as np
import pytest
from hypothesis import given, strategies as st

from slipchannel import build_grid, scalar_from_function, vector_from_functions, zero_vector
from slipchannel.fields import VectorField
from slipchannel.grid import BoundaryData


def test_unit_cube_spacings():
    g = build_grid(8, 8, 8, 1, 1, 1)
    assert g.h_x == g.h_y == g.h_z == 1 / 8


def test_anisotropic_spacings():
    g = build_grid(4, 4, 4, 2, 2, 1)
    assert g.h_x == 0.5 and g.h_y == 0.5 and g.h_z == 0.25


def test_count_below_minimum():
    with pytest.raises(ValueError, match="count below minimum"):
        build_grid(3, 8, 8, 1, 1, 1)


def test_nonpositive_length():
    with pytest.raises(ValueError, match="length must be positive"):
        build_grid(8, 8, 8, 1, 0.0, 1)


@given(st.integers(4, 32), st.floats(0.1, 10.0))
def test_spacing_consistency(n, length):
    g = build_grid(n, 4, 4, length, 1, 1)
    assert np.isclose(g.h_x * g.n_x, g.L_x)


def test_boundary_data_validation():
    with pytest.raises(ValueError):
        BoundaryData(nu=0.0)
    with pytest.raises(ValueError):
        BoundaryData(nu=1.0, gamma=-1.0)
    assert BoundaryData(nu=2.0, gamma=0.0).gamma == 0.0


def test_tangential_flag_enforced():
    g = build_grid(4, 4, 4, 1, 1, 1)
    w = np.zeros(g.shape_w)
    w[0, 0, 0] = 1e-30
    with pytest.raises(ValueError, match="wall-normal"):
        VectorField(g, np.zeros(g.shape_u), np.zeros(g.shape_v), w,
                    tangential=True)


def test_solenoidal_flag_enforced():
    g = build_grid(4, 4, 4, 1, 1, 1)
    u = np.zeros(g.shape_u)
    u[0, 0, 0] = 1.0
    with pytest.raises(ValueError, match="solenoidal"):
        VectorField(g, u, np.zeros(g.shape_v), np.zeros(g.shape_w),
                    solenoidal=True)


def test_fields_immutable(grid8):
    v = zero_vector(grid8)
    with pytest.raises(ValueError):
        v.u[0, 0, 0] = 1.0
    q = scalar_from_function(grid8, lambda x, y, z: x)
    with pytest.raises(ValueError):
        q.data[0, 0, 0] = 1.0


def test_dof_roundtrip(grid8, rng):
    x = rng.standard_normal(grid8.n_tangential)
    v = VectorField.from_dofs(grid8, x)
    assert np.array_equal(v.to_dofs(), x)
    assert v.tangential


def test_sampling_positions(grid8):
    v = vector_from_functions(grid8, lambda x, y, z: x, lambda x, y, z: y,
                              lambda x, y, z: 0 * z, tangential=True)
    assert np.allclose(v.u[:, 0, 0], grid8.faces_x())
    assert np.allclose(v.v[0, :, 0], grid8.faces_y())
