import numpy as np
import pytest

from slipchannel import VectorField, divergence, dot, gradient, helmholtz_project, scalar_from_function
from slipchannel.poisson import neumann_laplacian_array, solve_neumann, solve_neumann_cg
from slipchannel.sampling import random_interior_scalar, random_solenoidal


def test_neumann_solve_residual_is_machine(grid8, rng):
    rhs = rng.standard_normal(grid8.shape_centers)
    rhs -= rhs.mean()
    psi, compat = solve_neumann(grid8, rhs)
    assert abs(compat) < 1e-14
    resid = neumann_laplacian_array(grid8, psi) - rhs
    assert np.abs(resid).max() < 1e-10 * max(np.abs(rhs).max(), 1.0)
    assert abs(psi.mean()) < 1e-13


def test_neumann_cg_matches_direct(grid8, rng):
    rhs = rng.standard_normal(grid8.shape_centers)
    psi, _ = solve_neumann(grid8, rhs)
    x0 = rng.standard_normal(grid8.shape_centers)
    psi_cg = solve_neumann_cg(grid8, rhs, x0=x0)
    assert np.abs(psi_cg - psi).max() < 1e-10


def test_helmholtz_gradient_input_vanishes(grid8, rng):
    phi = random_interior_scalar(grid8, rng)
    g = gradient(phi, wall="zero_flux")
    g_sigma, grad_psi, _ = helmholtz_project(g)
    assert np.abs(g_sigma.to_dofs()).max() < 1e-11 * max(np.abs(g.to_dofs()).max(), 1.0)


def test_helmholtz_solenoidal_fixed_point(grid8, rng):
    s = random_solenoidal(grid8, rng)
    g_sigma, grad_psi, _ = helmholtz_project(s)
    assert np.abs(g_sigma.to_dofs() - s.to_dofs()).max() < 1e-11
    assert np.abs(grad_psi.u).max() < 1e-11


def test_helmholtz_orthogonal_idempotent_ensemble(grid8):
    """50 random fields: projection and orthogonality defects below 1e-9."""
    rng = np.random.default_rng(7)
    worst_proj, worst_orth, worst_div = 0.0, 0.0, 0.0
    for _ in range(50):
        g = VectorField(grid8, rng.standard_normal(grid8.shape_u),
                        rng.standard_normal(grid8.shape_v),
                        rng.standard_normal(grid8.shape_w))
        g_sigma, grad_psi, _ = helmholtz_project(g)
        assert np.abs(g_sigma.w[:, :, 0]).max() == 0.0
        assert np.abs(g_sigma.w[:, :, -1]).max() == 0.0
        worst_div = max(worst_div, np.abs(divergence(g_sigma).data).max())
        worst_orth = max(worst_orth, abs(dot(g_sigma, grad_psi)))
        again, _, _ = helmholtz_project(g_sigma)
        worst_proj = max(worst_proj,
                         np.abs(again.to_dofs() - g_sigma.to_dofs()).max())
    assert worst_div < 1e-9
    assert worst_orth < 1e-9
    assert worst_proj < 1e-10


def test_helmholtz_reconstruction(grid8, rng):
    g = VectorField(grid8, rng.standard_normal(grid8.shape_u),
                    rng.standard_normal(grid8.shape_v),
                    rng.standard_normal(grid8.shape_w))
    g_sigma, grad_psi, psi = helmholtz_project(g)
    total = g_sigma + grad_psi
    assert np.abs(total.u - g.u).max() < 1e-12
    assert np.abs(total.w - g.w).max() < 1e-12
