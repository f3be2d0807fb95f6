import numpy as np
import pytest

from slipchannel import (ScalarField, VectorField, divergence, dot, gradient,
                         scalar_from_function, zero_vector)
from slipchannel.errors import AnnihilatorError, MeanValueError
from slipchannel.sampling import (random_interior_scalar, random_solenoidal,
                                  random_tangential)
from slipchannel.spaces import (CellBox, Functional, annihilator_defect,
                                bogovskii, dual_inner, dual_norm, embed,
                                metric_context, pressure_from_functional,
                                project_dual_annihilator,
                                project_h1_complement,
                                reconstruction_defect)
from slipchannel import build_grid


def test_embed_zero_pairs_to_zero(grid8, ctx8, rng):
    z = embed(zero_vector(grid8))
    assert z.pair(random_tangential(grid8, rng)) == 0.0


def test_embed_pairing_matches_quadrature(grid8, rng):
    g = random_tangential(grid8, rng)
    phi = random_tangential(grid8, rng)
    assert embed(g).pair(phi) == pytest.approx(dot(g, phi), rel=1e-13)


def test_embedded_interior_gradient_annihilates(grid8, ctx8, rng):
    """The kernel content of the dual embedding: interior gradients pair to
    zero with every solenoidal tangential field."""
    psi = random_interior_scalar(grid8, rng, margin_cells=3)
    f = embed(gradient(psi, wall="zero_flux"))
    assert annihilator_defect(ctx8, f) < 1e-12


def test_pairing_bilinear(grid8, rng):
    f1 = Functional(grid8, rng.standard_normal(grid8.n_tangential))
    f2 = Functional(grid8, rng.standard_normal(grid8.n_tangential))
    phi = random_tangential(grid8, rng)
    assert (f1 + 2.0 * f2).pair(phi) == pytest.approx(
        f1.pair(phi) + 2.0 * f2.pair(phi), rel=1e-12)


def test_dual_norm_zero(grid8, ctx8):
    assert dual_norm(ctx8, Functional(grid8, np.zeros(grid8.n_tangential))) == 0.0


def test_dual_norm_unwinds_metric(grid8, ctx8, rng):
    v = random_tangential(grid8, rng)
    f = Functional(grid8, ctx8.k0 @ v.to_dofs())
    assert dual_norm(ctx8, f) == pytest.approx(ctx8.h1_norm(v), rel=1e-12)


def test_dual_norm_is_operator_norm(grid8, ctx8, rng):
    """sup over the unit ball is attained at the metric representer."""
    f = Functional(grid8, rng.standard_normal(grid8.n_tangential))
    dn = dual_norm(ctx8, f)
    for _ in range(10):
        phi = random_tangential(grid8, rng)
        assert abs(f.pair(phi)) <= dn * ctx8.h1_norm(phi) * (1 + 1e-10)
    rep = VectorField.from_dofs(grid8, ctx8.solve_k0(f.cov))
    assert abs(f.pair(rep)) == pytest.approx(dn * ctx8.h1_norm(rep), rel=1e-9)


def test_dual_norm_l2_bound_fit(grid8, ctx8):
    """dual_norm(embed g) <= c ||g||_2 with one fitted c over 20 fields."""
    rng = np.random.default_rng(5)
    from slipchannel.calculus import norm
    ratios = []
    for _ in range(20):
        g = random_tangential(grid8, rng)
        ratios.append(dual_norm(ctx8, embed(g)) / norm(g, 2))
    c = max(ratios)
    assert 0 < c < 1.5 and min(ratios) > 0


# -- primal/dual projections -------------------------------------------------

def test_projection_kernel_is_solenoidal(grid8, ctx8, rng):
    s = random_solenoidal(grid8, rng)
    e = project_h1_complement(ctx8, s)
    assert np.abs(e.to_dofs()).max() < 1e-11 * max(np.abs(s.to_dofs()).max(), 1.0)


def test_projection_fixes_interior_gradients(grid8, ctx8, rng):
    phi = random_interior_scalar(grid8, rng, margin_cells=3)
    gp = gradient(phi, wall="zero_flux")
    e = project_h1_complement(ctx8, gp)
    scale = max(np.abs(gp.to_dofs()).max(), 1e-300)
    assert np.abs(e.to_dofs() - gp.to_dofs()).max() / scale < 1e-11


def test_projection_idempotent_orthogonal(grid8, ctx8, rng):
    psi = random_tangential(grid8, rng)
    e1 = project_h1_complement(ctx8, psi)
    e2 = project_h1_complement(ctx8, e1)
    assert np.abs(e2.to_dofs() - e1.to_dofs()).max() < 1e-10
    cross = float((ctx8.k0 @ e1.to_dofs()) @ (psi.to_dofs() - e1.to_dofs()))
    assert abs(cross) < 1e-10 * ctx8.h1_norm(psi) ** 2


def test_conjugation_identity(grid8, ctx8, rng):
    """primal projection after the metric inverse = metric inverse after the
    dual projection, to solver precision."""
    for _ in range(5):
        f = Functional(grid8, rng.standard_normal(grid8.n_tangential))
        lhs = project_h1_complement(
            ctx8, VectorField.from_dofs(grid8, ctx8.solve_k0(f.cov))).to_dofs()
        rhs = ctx8.solve_k0(project_dual_annihilator(ctx8, f).cov)
        assert np.abs(lhs - rhs).max() < 1e-9 * max(np.abs(lhs).max(), 1.0)


def test_dual_projection_range_annihilates(grid8, ctx8, rng):
    f = project_dual_annihilator(
        ctx8, Functional(grid8, rng.standard_normal(grid8.n_tangential)))
    assert f.annihilator
    for _ in range(5):
        phi = random_solenoidal(grid8, rng)
        assert abs(f.pair(phi)) < 1e-10 * ctx8.h1_norm(phi) * dual_norm(ctx8, f)


def test_dual_projection_selfadjoint(grid8, ctx8, rng):
    f = Functional(grid8, rng.standard_normal(grid8.n_tangential))
    h = Functional(grid8, rng.standard_normal(grid8.n_tangential))
    lhs = dual_inner(ctx8, project_dual_annihilator(ctx8, f), h)
    rhs = dual_inner(ctx8, f, project_dual_annihilator(ctx8, h))
    assert lhs == pytest.approx(rhs, rel=1e-9)


# -- pressure representation ---------------------------------------------------

def test_pressure_recovery_manufactured():
    """Analytically sampled gradient of q = cos(2 pi x) cos(pi z/H) recovers
    q up to its mean at second order."""
    errs = {}
    for n in (8, 16):
        g = build_grid(n, n, n, 1.0, 1.0, 1.0)
        ctx = metric_context(g)
        grad_q = lambda: None
        from slipchannel import vector_from_functions
        gq = vector_from_functions(
            g,
            lambda x, y, z: -2 * np.pi * np.sin(2 * np.pi * x) * np.cos(np.pi * z),
            lambda x, y, z: 0 * z,
            lambda x, y, z: -np.pi * np.cos(2 * np.pi * x) * np.sin(np.pi * z))
        f = embed(gq)
        p = pressure_from_functional(ctx, f, rel_tol=0.2)
        q = scalar_from_function(g, lambda x, y, z: np.cos(2 * np.pi * x)
                                 * np.cos(np.pi * z))
        expected = q.data - q.data.mean()
        errs[n] = np.abs(p.data - expected).max()
    assert errs[8] / errs[16] > 3.0     # second-order recovery


def test_pressure_recovery_discrete_gradient_exact(grid8, ctx8, rng):
    q = random_interior_scalar(grid8, rng)
    f = embed(gradient(q, wall="zero_flux"))
    p = pressure_from_functional(ctx8, f)
    assert np.abs(p.data - (q.data - q.data.mean())).max() < 1e-12
    assert reconstruction_defect(ctx8, f, p) < 1e-12


def test_pressure_zero_functional(grid8, ctx8):
    p = pressure_from_functional(ctx8, Functional(grid8, np.zeros(grid8.n_tangential)))
    assert np.abs(p.data).max() == 0.0


def test_pressure_uniqueness_two_solvers(grid8, ctx8, rng):
    f = project_dual_annihilator(
        ctx8, embed(random_tangential(grid8, rng)))
    p1 = pressure_from_functional(ctx8, f, method="fft")
    p2 = pressure_from_functional(ctx8, f, method="cg")
    assert np.abs(p1.data - p2.data).max() < 1e-10


def test_pressure_rejects_solenoidal_content(grid8, ctx8, rng):
    s = random_solenoidal(grid8, rng)
    with pytest.raises(AnnihilatorError, match="solenoidal content"):
        pressure_from_functional(ctx8, embed(s))


def test_pressure_omega0_mean(grid8, ctx8, rng):
    box = CellBox(0, 8, 0, 8, 2, 6)
    f = project_dual_annihilator(ctx8, embed(random_tangential(grid8, rng)))
    p = pressure_from_functional(ctx8, f, omega0=box)
    assert abs(box.mean(p)) < 1e-13


def test_reconstruction_bound_fitted(grid8, ctx8, rng):
    """||p||_2 <= c dual_norm(F) with one fitted c over an ensemble."""
    from slipchannel.calculus import norm
    ratios = []
    for _ in range(10):
        f = project_dual_annihilator(ctx8, embed(random_tangential(grid8, rng)))
        dn = dual_norm(ctx8, f)
        if dn < 1e-13:
            continue
        p = pressure_from_functional(ctx8, f)
        ratios.append(norm(p, 2) / dn)
    assert ratios and max(ratios) < 10.0


# -- divergence inverse ----------------------------------------------------------

def test_bogovskii_zero(grid8, ctx8):
    psi, c = bogovskii(ctx8, ScalarField(grid8, np.zeros(grid8.shape_centers)))
    assert np.abs(psi.to_dofs()).max() == 0.0


def test_bogovskii_interior_box(grid8, ctx8):
    box = CellBox(0, 8, 0, 8, 2, 6)
    X, Y, Z = grid8.meshgrid(grid8.centers_x(), grid8.centers_y(),
                             grid8.centers_z())
    g = ScalarField(grid8, np.sin(2 * np.pi * X) * np.exp(-8 * (Z - 0.5) ** 2))
    psi, c = bogovskii(ctx8, g, box)
    mask = box.mask(grid8)
    resid = divergence(psi).data[mask] - g.data[mask]
    assert np.abs(resid).max() < 1e-8
    # zero outside and on the box boundary, exactly
    assert np.abs(psi.u[:, :, :2]).max() == 0.0
    assert np.abs(psi.u[:, :, 6:]).max() == 0.0
    assert np.abs(psi.w[:, :, :3]).max() == 0.0
    assert c > 0


def test_bogovskii_rejects_nonzero_mean(grid8, ctx8):
    g = ScalarField(grid8, np.full(grid8.shape_centers, 0.1))
    with pytest.raises(MeanValueError, match="mean-value not zero"):
        bogovskii(ctx8, g)
