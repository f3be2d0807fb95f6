from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from slipchannel import (build_grid, divergence, dot, grad_norm_l2, norm,
                         vector_from_functions, zero_vector)
from slipchannel.errors import SolveError
from slipchannel.grid import BoundaryData
from slipchannel.operators import (SlipStokesOperator, apply_A, apply_B,
                                   maximal_regularity_exponents_ok, resolvent,
                                   unsteady_stokes, yosida)
from slipchannel.sampling import random_solenoidal, random_tangential
from slipchannel.spaces import Functional, dual_norm
from oracles import richardson, robin_kappa_bisect


def shear(grid):
    return vector_from_functions(grid, lambda x, y, z: z, lambda x, y, z: 0 * z,
                                 lambda x, y, z: 0 * z, tangential=True)


# -- the slip form -------------------------------------------------------------

def test_rigid_translation_annihilated(grid8):
    op = SlipStokesOperator(grid8, BoundaryData(nu=1.0, gamma=0.0))
    c = vector_from_functions(grid8, lambda x, y, z: 1 + 0 * z,
                              lambda x, y, z: -2 + 0 * z,
                              lambda x, y, z: 0 * z, tangential=True)
    assert np.abs(apply_A(op, c).cov).max() == 0.0


def test_shear_energy_hand_value():
    """nu = gamma = 1, v = (z,0,0): the form tends to the hand value 2 at
    first order in h (half-cell closure); Richardson removes the O(h) term.
    The gradient quadrature and the wall speed integral are exact already."""
    vals = {}
    for nz in (32, 64):
        g = build_grid(4, 4, nz, 1, 1, 1)
        op = SlipStokesOperator(g, BoundaryData(nu=1.0, gamma=1.0))
        v = shear(g)
        vals[nz] = op.energy(v)
        assert grad_norm_l2(v) ** 2 == pytest.approx(1.0, abs=1e-12)
    assert richardson(vals[32], vals[64], order=1) == pytest.approx(2.0, abs=2e-3)
    assert abs(vals[64] - 2.0) < 2.5 * (1 / 64)


def test_form_symmetric_and_psd(grid8, bc, rng):
    op = SlipStokesOperator(grid8, bc)
    a = op.matrix
    assert abs(a - a.T).max() == 0.0
    for _ in range(5):
        v = random_tangential(grid8, rng)
        assert op.energy(v) >= 0.0


def test_korn_ratio_positive_and_stable(bc):
    mins = {}
    for n in (8, 12):
        g = build_grid(n, n, n, 1, 1, 1)
        op = SlipStokesOperator(g, bc)
        rng = np.random.default_rng(11)
        ratios = [op.energy(v) / (bc.nu * grad_norm_l2(v) ** 2)
                  for v in (random_tangential(g, rng) for _ in range(25))]
        mins[n] = min(ratios)
    assert mins[8] > 0 and mins[12] > 0
    assert abs(mins[8] - mins[12]) / mins[12] < 0.3


def test_slipform_dual_bound(grid8, ctx8, bc, rng):
    op = SlipStokesOperator(grid8, bc)
    ratios = [dual_norm(ctx8, apply_A(op, v)) / grad_norm_l2(v)
              for v in (random_tangential(grid8, rng) for _ in range(20))]
    assert max(ratios) < 10.0


# -- convection ------------------------------------------------------------------

def test_convection_of_constant_by_solenoidal(grid8, rng):
    s = random_solenoidal(grid8, rng)
    const = vector_from_functions(grid8, lambda x, y, z: 2 + 0 * z,
                                  lambda x, y, z: 1 + 0 * z,
                                  lambda x, y, z: 0 * z, tangential=True)
    assert np.abs(apply_B(grid8, s, const).cov).max() < 1e-12


def test_skew_identity_exact(grid8, rng):
    for _ in range(5):
        v = random_tangential(grid8, rng)
        w = random_tangential(grid8, rng)
        assert abs(apply_B(grid8, v, w).pair(w)) < 1e-11 * max(
            1.0, norm(w, 2) ** 2)


def test_convection_dual_estimate(grid8, ctx8, rng):
    """Ensemble fit of the trilinear bound constant."""
    ratios = []
    for _ in range(20):
        v, w = random_solenoidal(grid8, rng), random_tangential(grid8, rng)
        denom = norm(v, 2) ** 0.5 * grad_norm_l2(v) ** 0.5 * grad_norm_l2(w)
        ratios.append(dual_norm(ctx8, apply_B(grid8, v, w)) / denom)
    assert 0 < max(ratios) < 5.0


# -- resolvent ----------------------------------------------------------------------

def test_resolvent_roundtrip(grid8, bc, rng):
    op = SlipStokesOperator(grid8, bc)
    v = random_tangential(grid8, rng)
    cov = op.matrix @ v.to_dofs() + 2.0 * op.cache.vc * v.to_dofs()
    rec = resolvent(op, Functional(grid8, np.asarray(cov)), 2.0)
    assert np.abs(rec.to_dofs() - v.to_dofs()).max() < 1e-10


def test_resolvent_zero(grid8, bc):
    op = SlipStokesOperator(grid8, bc)
    out = resolvent(op, Functional(grid8, np.zeros(grid8.n_tangential)), 1.0)
    assert np.abs(out.to_dofs()).max() == 0.0


def test_resolvent_symmetry(grid8, bc, rng):
    op = SlipStokesOperator(grid8, bc)
    v, h = random_tangential(grid8, rng), random_tangential(grid8, rng)
    lhs = dot(resolvent(op, v, 1.0), h)
    rhs = dot(v, resolvent(op, h, 1.0))
    assert lhs == pytest.approx(rhs, rel=1e-10)


def test_resolvent_k0_needs_friction(grid8):
    op = SlipStokesOperator(grid8, BoundaryData(nu=1.0, gamma=0.0))
    with pytest.raises(SolveError, match="singular"):
        resolvent(op, Functional(grid8, np.zeros(grid8.n_tangential)), 0.0)
    op2 = SlipStokesOperator(grid8, BoundaryData(nu=1.0, gamma=1.0))
    out = resolvent(op2, zero_vector(grid8), 0.0)
    assert np.abs(out.to_dofs()).max() == 0.0


def test_yosida_contraction(grid8, bc, rng):
    """Spectrum in (0, inf): the smoothing never expands the L2 norm."""
    op = SlipStokesOperator(grid8, bc)
    for k in (1.0, 10.0):
        s = random_solenoidal(grid8, rng)
        assert norm(yosida(op, s, k), 2) <= norm(s, 2) * (1 + 1e-12)


def test_yosida_selfadjoint_commuting(grid8, bc, rng):
    op = SlipStokesOperator(grid8, bc)
    s1, s2 = random_solenoidal(grid8, rng), random_solenoidal(grid8, rng)
    assert abs(dot(yosida(op, s1, 10.0), s2)
               - dot(s1, yosida(op, s2, 10.0))) < 1e-9
    c12 = yosida(op, yosida(op, s1, 3.0), 10.0)
    c21 = yosida(op, yosida(op, s1, 10.0), 3.0)
    assert np.abs(c12.to_dofs() - c21.to_dofs()).max() < 1e-9


def test_yosida_strong_convergence(grid8, bc, rng):
    op = SlipStokesOperator(grid8, bc)
    s = random_solenoidal(grid8, rng)
    errs = [norm(yosida(op, s, k) - s, 2) for k in (1.0, 10.0, 100.0, 1000.0)]
    assert all(a > b for a, b in zip(errs, errs[1:]))
    assert errs[-1] < 0.2 * errs[0]


def test_yosida_preserves_divergence(grid8, bc, rng):
    op = SlipStokesOperator(grid8, bc)
    out = yosida(op, random_solenoidal(grid8, rng), 10.0)
    assert np.abs(divergence(out).data).max() < 1e-10


# -- unsteady Stokes --------------------------------------------------------------

def test_stokes_zero_data(grid8, bc):
    res = unsteady_stokes(grid8, bc, None, zero_vector(grid8), 0.01, 5)
    assert all(np.abs(v.to_dofs()).max() == 0.0 for v in res.velocities)


def test_stokes_eigenmode_decay():
    """The slowest shear mode decays at the transcendental Robin rate."""
    nu, gamma, H = 1.0, 1.0, 1.0
    kappa = robin_kappa_bisect(nu, gamma, H, branch=0)
    assert 1.30 < kappa < 1.31      # frozen sanity window for these parameters
    lam = nu * kappa ** 2
    delta = np.arctan2(gamma, nu * kappa)
    g = build_grid(4, 4, 64, 1, 1, H)
    bc = BoundaryData(nu=nu, gamma=gamma)
    u0 = vector_from_functions(g, lambda x, y, z: np.cos(kappa * z - delta),
                               lambda x, y, z: 0 * z,
                               lambda x, y, z: 0 * z, tangential=True)
    dt = 0.01
    res = unsteady_stokes(g, bc, None, u0, dt, 1)
    factor = norm(res.velocities[1], 2) / norm(res.velocities[0], 2)
    expected = 1.0 / (1.0 + dt * lam)
    assert factor == pytest.approx(expected, abs=5e-3 * (dt + g.h_z ** 2) / dt)


def test_stokes_norm_ledger_finite(grid8, bc, rng):
    s = random_solenoidal(grid8, rng)
    res = unsteady_stokes(grid8, bc, None, s, 0.02, 5, lebesgue_q=4.0 / 3.0)
    for key in ("dt_u_q", "u_2q", "pi_1q"):
        assert np.all(np.isfinite(res.norms[key]))


def test_stokes_divergence_and_walls(grid8, bc, rng):
    res = unsteady_stokes(grid8, bc, None, random_solenoidal(grid8, rng), 0.02, 3)
    for v in res.velocities:
        assert np.abs(divergence(v).data).max() < 1e-10
        assert np.abs(v.w[:, :, 0]).max() == 0.0


# -- exponent bookkeeping -----------------------------------------------------------

def test_maxreg_truth_table():
    assert maximal_regularity_exponents_ok(Fraction(8, 7), Fraction(4, 3))
    assert not maximal_regularity_exponents_ok(2, Fraction(3, 2))
    assert not maximal_regularity_exponents_ok(1, 1)
    assert maximal_regularity_exponents_ok("10/9", "6/5") == (
        Fraction(2, 1) / Fraction(10, 9) + 3 / Fraction(6, 5) == 4)


@given(st.fractions(min_value=Fraction(1, 1), max_value=Fraction(2, 1)))
@settings(max_examples=40, deadline=None)
def test_maxreg_identity_forced(r):
    """Whenever the checker accepts (r, q), the identity holds exactly."""
    if r <= 1 or r >= 2:
        return
    q = Fraction(3, 1) / (4 - Fraction(2, 1) / r)
    if maximal_regularity_exponents_ok(r, q):
        assert 2 / r + 3 / q == 4
        assert 1 < q < Fraction(3, 2)


def test_maxreg_rejects_floats():
    with pytest.raises(ValueError, match="Fraction"):
        maximal_regularity_exponents_ok(4 / 3, Fraction(4, 3))
