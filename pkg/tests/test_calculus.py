import numpy as np
import pytest

from slipchannel import (build_grid, curl_of_potential, diff, divergence, dot,
                         gradient, integrate, laplacian, norm,
                         scalar_from_function, trace, vector_from_functions)
from slipchannel.stencils import operator_cache
from oracles import gauss_integral_1d


def shear(grid):
    return vector_from_functions(grid, lambda x, y, z: z, lambda x, y, z: 0 * z,
                                 lambda x, y, z: 0 * z, tangential=True)


def test_gradient_of_linear_is_exact(grid8):
    p = scalar_from_function(grid8, lambda x, y, z: z)
    gp = gradient(p)
    # one-sided wall fill makes the z-gradient exactly one everywhere
    assert np.allclose(gp.w, 1.0, atol=1e-13)
    assert np.abs(gp.u).max() == 0.0 and np.abs(gp.v).max() == 0.0


def test_div_of_curl_is_machine_zero(grid8):
    s = lambda z: (z * (1 - z)) ** 2
    v = curl_of_potential(
        grid8,
        lambda x, y, z: np.sin(2 * np.pi * y) * s(z),
        lambda x, y, z: np.cos(2 * np.pi * x) * s(z),
        lambda x, y, z: np.sin(2 * np.pi * x) * np.cos(2 * np.pi * y),
        tangential=True)
    assert np.abs(divergence(v).data).max() < 1e-12


def test_laplacian_second_order():
    errs = {}
    for n in (32, 64):
        g = build_grid(n, 4, 4, 1, 1, 1)
        q = scalar_from_function(g, lambda x, y, z: np.sin(2 * np.pi * x))
        lq = laplacian(q)
        exact = scalar_from_function(
            g, lambda x, y, z: -4 * np.pi ** 2 * np.sin(2 * np.pi * x))
        errs[n] = np.abs(lq.data - exact.data).max()
    assert 3.8 < errs[32] / errs[64] < 4.2


def test_laplacian_is_div_grad_composition(grid8, rng):
    q = scalar_from_function(
        grid8, lambda x, y, z: np.sin(2 * np.pi * x) * np.cos(np.pi * z) + z ** 2)
    for wall in ("one_sided", "zero_flux"):
        direct = laplacian(q, wall=wall)
        composed = divergence(gradient(q, wall=wall))
        assert np.array_equal(direct.data, composed.data)


def test_diff_dispatch_matches_functions(grid8):
    q = scalar_from_function(grid8, lambda x, y, z: np.cos(2 * np.pi * y) * z)
    assert np.array_equal(diff(q, "gradient").u, gradient(q).u)
    v = shear(grid8)
    assert np.array_equal(diff(v, "divergence").data, divergence(v).data)
    with pytest.raises(ValueError, match="advection"):
        diff(v, "advection")


def test_volume_integral_of_one():
    g = build_grid(8, 8, 8, 1, 1, 1)
    one = scalar_from_function(g, lambda x, y, z: 1.0 + 0 * z)
    assert integrate(one) == pytest.approx(1.0, abs=1e-14)


def test_wall_surface_speed_integral(grid8):
    # v = (z, 0, 0) on the unit channel: top wall contributes 1, bottom 0
    assert integrate(shear(grid8), "wall_surfaces") == pytest.approx(1.0, abs=1e-13)


def test_l2_norm_of_sine(grid8):
    v = scalar_from_function(grid8, lambda x, y, z: np.sin(2 * np.pi * x))
    # midpoint quadrature of sin^2 over full periods is exact
    assert norm(v, 2) == pytest.approx(1 / np.sqrt(2), abs=1e-13)


def test_norm_rejects_small_q(grid8):
    with pytest.raises(ValueError, match="q"):
        norm(scalar_from_function(grid8, lambda x, y, z: x), 0.5)


def test_norm_infinity(grid8):
    q = scalar_from_function(grid8, lambda x, y, z: x)
    assert norm(q, np.inf) == pytest.approx(q.data.max())


def test_w1q_norm_combines_field_and_gradient(grid8):
    q = scalar_from_function(grid8, lambda x, y, z: z)
    assert norm(q, 2, "W1q") > norm(q, 2)


def test_trace_of_tangential_normal_component(grid8):
    v = shear(grid8)
    assert np.abs(trace(v, "bottom")["w"]).max() == 0.0
    assert np.abs(trace(v, "top")["w"]).max() == 0.0


def test_trace_linear_profile_exact(grid8):
    v = shear(grid8)
    assert np.allclose(trace(v, "top")["u"], 1.0, atol=1e-13)
    assert np.allclose(trace(v, "bottom")["u"], 0.0, atol=1e-13)


def test_trace_zero(grid8):
    from slipchannel import zero_vector
    tr = trace(zero_vector(grid8), "bottom")
    assert all(np.abs(tr[k]).max() == 0.0 for k in tr)


def test_integration_by_parts_exact(grid8, rng):
    """(q, div v) + (grad q, v) = 0 to machine precision for tangential v."""
    from slipchannel.sampling import random_tangential
    q = scalar_from_function(grid8, lambda x, y, z: np.cos(2 * np.pi * x) * z ** 2)
    v = random_tangential(grid8, rng)
    lhs = float((q.data * divergence(v).data).sum() * grid8.cell_volume)
    rhs = dot(gradient(q, wall="zero_flux"), v)
    assert abs(lhs + rhs) < 1e-12 * max(abs(lhs), 1.0)


def test_matrix_and_field_divergence_agree(grid8, rng):
    from slipchannel.sampling import random_tangential
    v = random_tangential(grid8, rng)
    cache = operator_cache(grid8)
    d_mat = (cache.div @ v.to_dofs()).reshape(grid8.shape_centers)
    assert np.abs(d_mat - divergence(v).data).max() < 1e-12


def test_dot_against_quadrature_oracle():
    # int_0^1 z * z^2 dz on the staggered layout via two routes
    g = build_grid(4, 4, 64, 1, 1, 1)
    a = vector_from_functions(g, lambda x, y, z: z, lambda x, y, z: 0 * z,
                              lambda x, y, z: 0 * z, tangential=True)
    b = vector_from_functions(g, lambda x, y, z: z ** 2, lambda x, y, z: 0 * z,
                              lambda x, y, z: 0 * z, tangential=True)
    exact = gauss_integral_1d(lambda z: z ** 3, 0.0, 1.0)
    assert dot(a, b) == pytest.approx(exact, abs=2e-4)
