"""Pressure reconstruction associated with a velocity trajectory.

The instantaneous momentum functionals (velocity embedding, slip form,
skew convection, forcing) are pushed through the dual annihilator
projection and realized as cell pressures with a fixed subdomain mean.
The assembled pressure is the time derivative of the velocity-sourced
potential plus the three instantaneous parts; only its gradient is
physical (the gauge is an additive time signal stored out of band).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .calculus import advect, divergence, gradient, gradient_tensor, vector_laplacian
from .errors import AnnihilatorError
from .fields import ScalarField, VectorField
from .grid import Grid
from .poisson import solve_neumann
from .solver import SpaceTimeTestField, WeakSolutionTrajectory
from .spaces import (CellBox, Functional, MetricContext, dual_norm, embed,
                     pressure_from_functional, project_dual_annihilator)
from .stencils import operator_cache

COMPONENT_NAMES = ("accel", "visc", "conv", "force")


@dataclass
class PressureDecomposition:
    """Four-part pressure split along a trajectory, plus the assembled field.

    components["accel"][n] is the harmonic potential sourced by u(t_n) whose
    time derivative enters the assembled pressure; "visc", "conv", "force"
    are the instantaneous parts from the slip form, the convection form and
    the forcing.  `gauge` is the spatially constant additive signal (kept out
    of the field arrays so gradient diagnostics are bitwise gauge-invariant).
    """

    grid: Grid
    omega0: CellBox
    dt: float
    times: np.ndarray
    components: dict
    assembled: list = field(default_factory=list)
    gauge: np.ndarray = None
    source_dual_norms: dict = field(default_factory=dict)
    mean_defects: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.gauge is None:
            self.gauge = np.zeros(len(self.times))

    @property
    def n_entries(self) -> int:
        return len(self.times)

    def pressure(self, n: int, materialize_gauge: bool = False) -> ScalarField:
        p = self.assembled[n]
        if materialize_gauge and self.gauge[n] != 0.0:
            return p.shifted(self.gauge[n])
        return p

    def mean_ledger(self) -> np.ndarray:
        """Omega_0 means of the assembled pressure including the gauge."""
        return np.array([self.omega0.mean(p) for p in self.assembled]) + self.gauge

    def norm_ledger(self) -> dict:
        """Per-step L2 norms of the four parts and their time-integrability sums.

        The velocity part is bounded in time (sup), the slip-form and forcing
        parts are square summable, the convection part is 4/3-power summable.
        """
        vc = self.grid.cell_volume
        out = {"t": self.times}
        for name in COMPONENT_NAMES:
            out[name] = np.array([np.sqrt((p.data ** 2).sum() * vc)
                                  for p in self.components[name]])
        dt = self.dt
        out["sup_accel"] = float(out["accel"].max(initial=0.0))
        out["l2_visc"] = float(np.sqrt((out["visc"] ** 2 * dt).sum()))
        out["l43_conv"] = float(((out["conv"] ** (4.0 / 3.0) * dt).sum()) ** 0.75)
        out["l2_force"] = float(np.sqrt((out["force"] ** 2 * dt).sum()))
        return out


def instantaneous_functionals(traj: WeakSolutionTrajectory, n: int) -> dict:
    """The four momentum covectors at step n (velocity, slip, convection, force)."""
    grid, bc = traj.grid, traj.bc
    cache = operator_cache(grid)
    u = traj.velocities[n]
    x = u.to_dofs()
    out = {
        "accel": embed(u),
        "visc": Functional(grid, cache.slip_form(bc.nu, bc.gamma) @ x),
        "conv": Functional(grid, cache.skew_advection_cov(x, x)),
    }
    f = traj.force_at(n if n < traj.n_steps else traj.n_steps - 1)
    out["force"] = embed(f) if f is not None else Functional(grid, np.zeros(cache.n_tan))
    return out


def assemble_F(traj: WeakSolutionTrajectory, n: int, rule: str = "left") -> Functional:
    """Accumulated momentum defect functional at t_n.

    F(t_n) = embed(u(t_n) - u(0)) + sum_{m<n} dt [A u + B(u, u) - embed(f)].
    rule="left" evaluates the integrand at the left endpoints (an independent
    rectangle rule; annihilator defect O(h^2 + dt)); rule="scheme" places the
    slip and convection terms where the stepper does, which this scheme's
    trajectories annihilate to solver precision.
    """
    grid, bc, dt = traj.grid, traj.bc, traj.dt
    cache = operator_cache(grid)
    a_mat = cache.slip_form(bc.nu, bc.gamma)
    acc = cache.vc * (traj.velocities[n].to_dofs() - traj.velocities[0].to_dofs())
    for m in range(n):
        xm = traj.velocities[m].to_dofs()
        if rule == "left":
            conv = cache.skew_advection_cov(xm, xm)
            visc = a_mat @ xm
        elif rule == "scheme":
            xm1 = traj.velocities[m + 1].to_dofs()
            conv = cache.skew_advection_cov(xm, xm1)
            visc = a_mat @ xm1
        else:
            raise ValueError(f"unknown quadrature rule {rule!r}")
        acc = acc + dt * (visc + conv)
        f = traj.force_at(m)
        if f is not None:
            acc = acc - dt * cache.vc * f.to_dofs()
    return Functional(grid, acc)


def decompose_pressure(ctx: MetricContext, traj: WeakSolutionTrajectory, n: int,
                       omega0: CellBox | None = None) -> dict:
    """One time step of the four-part split.

    Each instantaneous functional S is mapped to the pressure representing
    -(dual annihilator projection of S); returns the four ScalarFields plus
    the dual norms of the projected sources (for the bound ledger).
    """
    box = omega0 if omega0 is not None else CellBox.full(ctx.grid)
    funcs = instantaneous_functionals(traj, n)
    fields, norms = {}, {}
    for name, s in funcs.items():
        proj = project_dual_annihilator(ctx, -1.0 * s)
        fields[name] = pressure_from_functional(ctx, proj, omega0=box)
        norms[name] = (dual_norm(ctx, proj), dual_norm(ctx, s))
    return {"fields": fields, "norms": norms}


def decompose_series(ctx: MetricContext, traj: WeakSolutionTrajectory,
                     omega0: CellBox | None = None) -> PressureDecomposition:
    """Run the split at every stored step and assemble the pressure."""
    box = omega0 if omega0 is not None else CellBox.full(ctx.grid)
    comps = {name: [] for name in COMPONENT_NAMES}
    dnorms = {name: [] for name in COMPONENT_NAMES}
    for n in range(len(traj.velocities)):
        entry = decompose_pressure(ctx, traj, n, box)
        for name in COMPONENT_NAMES:
            comps[name].append(entry["fields"][name])
            dnorms[name].append(entry["norms"][name])
    dec = PressureDecomposition(ctx.grid, box, traj.dt, np.array(traj.times),
                                comps, source_dual_norms=dnorms)
    assemble_pressure(dec)
    dec.mean_defects = {name: max(abs(box.mean(p)) for p in comps[name])
                        for name in COMPONENT_NAMES}
    return dec


def assemble_pressure(dec: PressureDecomposition) -> None:
    """p(t_n) = d/dt p_accel + p_visc + p_conv + p_force (central differences)."""
    n = dec.n_entries
    if n < 2:
        raise ValueError("need at least two decomposition entries to assemble")
    acc = dec.components["accel"]
    dec.assembled = []
    for k in range(n):
        if k == 0:
            dpdt = (acc[1].data - acc[0].data) / dec.dt
        elif k == n - 1:
            dpdt = (acc[-1].data - acc[-2].data) / dec.dt
        else:
            dpdt = (acc[k + 1].data - acc[k - 1].data) / (2.0 * dec.dt)
        total = dpdt + dec.components["visc"][k].data \
            + dec.components["conv"][k].data + dec.components["force"][k].data
        dec.assembled.append(ScalarField(dec.grid, total))


def gauge_shift(dec: PressureDecomposition, signal) -> PressureDecomposition:
    """Add a spatially constant time signal to the pressure trajectory.

    The signal lives in the out-of-band gauge channel; field arrays (hence
    every gradient-based diagnostic) are untouched bitwise.
    """
    values = np.array([float(signal(t)) for t in dec.times]) \
        if callable(signal) else np.asarray(signal, dtype=float)
    if values.shape != dec.times.shape:
        raise ValueError("gauge signal length does not match the series")
    return replace(dec, gauge=dec.gauge + values,
                   components=dec.components, assembled=dec.assembled)


def momentum_residual(traj: WeakSolutionTrajectory, dec: PressureDecomposition,
                      n: int, margin: int = 2) -> float:
    """Interior max-norm residual of the momentum equation at step n.

    (u^{n+1} - u^n)/dt + (u . grad) u + grad p - nu lap u - f, evaluated on
    faces at least `margin` cells away from the walls (the assembled pressure
    at t_n carries the central time derivative of the velocity potential).
    """
    grid, bc = traj.grid, traj.bc
    u0, u1 = traj.velocities[n], traj.velocities[n + 1]
    dudt = (1.0 / traj.dt) * (u1 - u0)
    adv = advect(u0, u1)
    gp = gradient(dec.assembled[n], wall="zero_flux")
    lap = vector_laplacian(u1)
    r = dudt + adv + gp - bc.nu * lap
    f = traj.force_at(n)
    if f is not None:
        r = r - f
    lo, hi = margin, grid.n_z - margin
    return max(float(np.abs(r.u[:, :, lo:hi]).max()),
               float(np.abs(r.v[:, :, lo:hi]).max()),
               float(np.abs(r.w[:, :, lo + 1:hi]).max()))


def verify_integral_identity(traj: WeakSolutionTrajectory,
                             dec: PressureDecomposition,
                             phi: SpaceTimeTestField) -> float:
    """Defect of the space-time identity linking u, the velocity potential and
    the instantaneous pressure parts against tangential test fields.

    phi(t) must be tangential (not necessarily solenoidal) with compact
    support in time.  The distinctive term is the pairing of the velocity
    potential with div d_t phi; for solenoidal phi all pressure terms vanish
    identically and the defect reduces to the plain weak residual.
    """
    grid, bc, dt = traj.grid, traj.bc, traj.dt
    cache = operator_cache(grid)
    a_mat = cache.slip_form(bc.nu, bc.gamma)
    vc = cache.vc
    total = 0.0
    for n in range(traj.n_steps):
        t_n = traj.times[n]
        phi_n, dphi_n = phi.at(t_n), phi.dt_at(t_n)
        u_n = traj.velocities[n]
        xn, px = u_n.to_dofs(), phi_n.to_dofs()
        lhs = (-vc * float(xn @ phi.dt_at(t_n).to_dofs())
               + float(cache.skew_advection_cov(xn, xn) @ px)
               + float((a_mat @ xn) @ px))
        f = traj.force_at(n)
        rhs = vc * float(f.to_dofs() @ px) if f is not None else 0.0
        rhs -= float((dec.components["accel"][n].data.ravel()
                      * vc) @ divergence(dphi_n).data.ravel())
        p2 = (dec.components["visc"][n].data + dec.components["conv"][n].data
              + dec.components["force"][n].data)
        rhs += float((p2.ravel() * vc) @ divergence(phi_n).data.ravel())
        total += dt * (lhs - rhs)
    return total


def pressure_poisson(u: VectorField, nu: float = 1.0) -> ScalarField:
    """Momentum-consistent pressure of a solenoidal tangential field (f = 0).

    Solves lap p = -grad u : (grad u)^T with wall Neumann data taken from the
    normal momentum trace (which on the flat walls reduces to nu d^2 w/dz^2);
    returns the zero-mean field.  For a single shear profile the right side
    vanishes identically and p = 0 in this gauge.
    """
    grid = u.grid
    t = gradient_tensor(u)
    rhs = -(t.entries[("x", "x")] ** 2 + t.entries[("y", "y")] ** 2
            + t.entries[("z", "z")] ** 2)
    rhs = rhs - 2.0 * _edge_xy_to_center(t.entries[("x", "y")] * t.entries[("y", "x")])
    rhs = rhs - 2.0 * _edge_z_to_center(t.entries[("x", "z")] * t.entries[("z", "x")], 0)
    rhs = rhs - 2.0 * _edge_z_to_center(t.entries[("y", "z")] * t.entries[("z", "y")], 1)

    h = grid.h_z
    w = u.w
    d2w_bottom = (2 * w[:, :, 0] - 5 * w[:, :, 1] + 4 * w[:, :, 2] - w[:, :, 3]) / h ** 2
    d2w_top = (2 * w[:, :, -1] - 5 * w[:, :, -2] + 4 * w[:, :, -3] - w[:, :, -4]) / h ** 2
    rhs = rhs.copy()
    rhs[:, :, 0] += nu * d2w_bottom / h
    rhs[:, :, -1] -= nu * d2w_top / h
    p, _ = solve_neumann(grid, rhs)
    return ScalarField(grid, p).zero_mean()


def _edge_xy_to_center(a: np.ndarray) -> np.ndarray:
    """Average a z-edge product onto cell centers (4 corners in x, y)."""
    return 0.25 * (a + np.roll(a, -1, 0) + np.roll(a, -1, 1)
                   + np.roll(np.roll(a, -1, 0), -1, 1))


def _edge_z_to_center(a: np.ndarray, periodic_axis: int) -> np.ndarray:
    """Average an xz- or yz-edge product onto cell centers."""
    horiz = 0.5 * (a + np.roll(a, -1, periodic_axis))
    return 0.5 * (horiz[:, :, :-1] + horiz[:, :, 1:])
