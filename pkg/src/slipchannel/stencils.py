"""Sparse stencil factory for the staggered channel.

Everything linear-algebraic in the package is built here once per grid:
difference/averaging blocks in each direction, the nine gradient-entry
matrices acting on the tangential DOF vector, the slip form, divergence,
trace extrapolation and the advection machinery.  All operators are ordinary
CSR matrices over the packed tangential vector

    x = [u.ravel(), v.ravel(), w_interior.ravel()]   (C order)

so that kron(opx, kron(opy, opz)) acts with opz on the fastest axis.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .grid import Grid

_CACHE = {}


def kron3(ax, ay, az) -> sp.csr_matrix:
    return sp.csr_matrix(sp.kron(ax, sp.kron(ay, az, format="csr"), format="csr"))


def eye(n) -> sp.csr_matrix:
    return sp.identity(n, format="csr")


# -- 1D periodic blocks -----------------------------------------------------

def d_periodic_c2f(n, h) -> sp.csr_matrix:
    """(q_i - q_{i-1}) / h : centers -> faces, periodic."""
    return (sp.eye(n, format="csr") - _shift(n, -1)) / h


def d_periodic_f2c(n, h) -> sp.csr_matrix:
    """(f_{i+1} - f_i) / h : faces -> centers, periodic."""
    return (_shift(n, +1) - sp.eye(n, format="csr")) / h


def a_periodic_c2f(n) -> sp.csr_matrix:
    return (sp.eye(n, format="csr") + _shift(n, -1)) * 0.5


def a_periodic_f2c(n) -> sp.csr_matrix:
    return (_shift(n, +1) + sp.eye(n, format="csr")) * 0.5


def d_periodic_wide(n, h) -> sp.csr_matrix:
    """(q_{i+1} - q_{i-1}) / 2h at the same positions, periodic."""
    return (_shift(n, +1) - _shift(n, -1)) / (2.0 * h)


def _shift(n, k) -> sp.csr_matrix:
    """Periodic shift: (S_k q)_i = q_{i+k}."""
    rows = np.arange(n)
    cols = (rows + k) % n
    return sp.csr_matrix((np.ones(n), (rows, cols)), shape=(n, n))


# -- 1D wall-bounded (z) blocks ---------------------------------------------
# Center-like z index: nz values at (k+1/2)h.  Face-like: nz+1 values at k*h.

def dz_c2f(nz, h, wall="one_sided") -> sp.csr_matrix:
    """d/dz of a center-like profile at all nz+1 face levels.

    Interior rows are the compact difference; wall rows are either zero
    (`wall="zero"`, the dual-gradient convention) or the second-order
    one-sided derivative (`wall="one_sided"`).
    """
    m = sp.lil_matrix((nz + 1, nz))
    for k in range(1, nz):
        m[k, k - 1] = -1.0 / h
        m[k, k] = 1.0 / h
    if wall == "one_sided":
        m[0, 0], m[0, 1], m[0, 2] = -2.0 / h, 3.0 / h, -1.0 / h
        m[nz, nz - 1], m[nz, nz - 2], m[nz, nz - 3] = 2.0 / h, -3.0 / h, 1.0 / h
    elif wall != "zero":
        raise ValueError(f"unknown wall treatment {wall!r}")
    return m.tocsr()


def dz_f2c(nz, h) -> sp.csr_matrix:
    """(f_{k+1} - f_k) / h : face-like (nz+1) -> center-like (nz)."""
    m = sp.lil_matrix((nz, nz + 1))
    for k in range(nz):
        m[k, k] = -1.0 / h
        m[k, k + 1] = 1.0 / h
    return m.tocsr()


def az_f2c(nz) -> sp.csr_matrix:
    m = sp.lil_matrix((nz, nz + 1))
    for k in range(nz):
        m[k, k] = 0.5
        m[k, k + 1] = 0.5
    return m.tocsr()


def az_c2f_interior(nz) -> sp.csr_matrix:
    """Average center-like onto the nz-1 interior face levels."""
    m = sp.lil_matrix((nz - 1, nz))
    for k in range(1, nz):
        m[k - 1, k - 1] = 0.5
        m[k - 1, k] = 0.5
    return m.tocsr()


def az_c2f_full(nz) -> sp.csr_matrix:
    """Average center-like onto all face levels, trace-extrapolated walls."""
    m = sp.lil_matrix((nz + 1, nz))
    for k in range(1, nz):
        m[k, k - 1] = 0.5
        m[k, k] = 0.5
    m[0, 0], m[0, 1] = 1.5, -0.5
    m[nz, nz - 1], m[nz, nz - 2] = 1.5, -0.5
    return m.tocsr()


def dz_c2f_strict(nz, h) -> sp.csr_matrix:
    """Compact difference of a center-like profile at interior face levels."""
    m = sp.lil_matrix((nz - 1, nz))
    for k in range(1, nz):
        m[k - 1, k - 1] = -1.0 / h
        m[k - 1, k] = 1.0 / h
    return m.tocsr()


def dz_wide_centerlike(nz, h) -> sp.csr_matrix:
    """Wide centered d/dz on a center-like profile, one-sided at the ends."""
    m = sp.lil_matrix((nz, nz))
    for k in range(1, nz - 1):
        m[k, k - 1] = -0.5 / h
        m[k, k + 1] = 0.5 / h
    m[0, 0], m[0, 1], m[0, 2] = -1.5 / h, 2.0 / h, -0.5 / h
    m[nz - 1, nz - 1], m[nz - 1, nz - 2], m[nz - 1, nz - 3] = 1.5 / h, -2.0 / h, 0.5 / h
    return m.tocsr()


def dz_wide_faceint(nz, h) -> sp.csr_matrix:
    """Wide centered d/dz of a full face-like profile at interior face levels."""
    m = sp.lil_matrix((nz - 1, nz + 1))
    for k in range(1, nz):
        m[k - 1, k - 1] = -0.5 / h
        m[k - 1, k + 1] = 0.5 / h
    return m.tocsr()


def inject_w(nz) -> sp.csr_matrix:
    """Interior face values (nz-1) -> full face profile (nz+1), walls zero."""
    m = sp.lil_matrix((nz + 1, nz - 1))
    for k in range(1, nz):
        m[k, k - 1] = 1.0
    return m.tocsr()


def trace_row(nz, which) -> sp.csr_matrix:
    """Second-order extrapolation of a center-like profile to a wall."""
    m = sp.lil_matrix((1, nz))
    if which == "bottom":
        m[0, 0], m[0, 1] = 1.5, -0.5
    elif which == "top":
        m[0, nz - 1], m[0, nz - 2] = 1.5, -0.5
    else:
        raise ValueError(which)
    return m.tocsr()


def d2z_centerlike(nz, h) -> sp.csr_matrix:
    """Second difference in z of a center-like profile, one-sided ends."""
    m = sp.lil_matrix((nz, nz))
    for k in range(1, nz - 1):
        m[k, k - 1], m[k, k], m[k, k + 1] = 1.0, -2.0, 1.0
    m[0, 0], m[0, 1], m[0, 2], m[0, 3] = 2.0, -5.0, 4.0, -1.0
    m[nz - 1, nz - 1], m[nz - 1, nz - 2], m[nz - 1, nz - 3], m[nz - 1, nz - 4] = \
        2.0, -5.0, 4.0, -1.0
    return m.tocsr() / h ** 2


def d2z_faceint(nz, h) -> sp.csr_matrix:
    """Second difference in z of a full face-like profile at interior levels."""
    m = sp.lil_matrix((nz - 1, nz + 1))
    for k in range(1, nz):
        m[k - 1, k - 1], m[k - 1, k], m[k - 1, k + 1] = 1.0, -2.0, 1.0
    return m.tocsr() / h ** 2


def d2_periodic(n, h) -> sp.csr_matrix:
    return (_shift(n, +1) - 2.0 * sp.eye(n, format="csr") + _shift(n, -1)) / h ** 2


# -- the per-grid operator cache ---------------------------------------------

COMPONENTS = ("x", "y", "z")


class OperatorCache:
    """All sparse operators for one grid, built lazily and shared."""

    def __init__(self, grid: Grid):
        self.grid = grid
        g = grid
        self.nc = g.n_cells
        self.nu_dof = g.n_x * g.n_y * g.n_z
        self.nw_dof = g.n_x * g.n_y * (g.n_z - 1)
        self.n_tan = 2 * self.nu_dof + self.nw_dof
        self.vc = g.cell_volume
        self._lazy = {}

    def _get(self, name, builder):
        if name not in self._lazy:
            self._lazy[name] = builder()
        return self._lazy[name]

    # block embedding ------------------------------------------------------

    def embed_block(self, mat, comp) -> sp.csr_matrix:
        """Extend a per-component matrix to act on the full tangential vector."""
        n0, n1, n2 = self.nu_dof, self.nu_dof, self.nw_dof
        zeros = sp.csr_matrix
        if comp == "x":
            return sp.hstack([mat, zeros((mat.shape[0], n1)),
                              zeros((mat.shape[0], n2))], format="csr")
        if comp == "y":
            return sp.hstack([zeros((mat.shape[0], n0)), mat,
                              zeros((mat.shape[0], n2))], format="csr")
        return sp.hstack([zeros((mat.shape[0], n0)),
                          zeros((mat.shape[0], n1)), mat], format="csr")

    # divergence and gradient ------------------------------------------------

    @property
    def div(self) -> sp.csr_matrix:
        """Discrete divergence: tangential DOFs -> cells."""
        def build():
            g = self.grid
            ix, iy, iz = eye(g.n_x), eye(g.n_y), eye(g.n_z)
            du = kron3(d_periodic_f2c(g.n_x, g.h_x), iy, iz)
            dv = kron3(ix, d_periodic_f2c(g.n_y, g.h_y), iz)
            dw = kron3(ix, iy, dz_f2c(g.n_z, g.h_z) @ inject_w(g.n_z))
            return sp.hstack([du, dv, dw], format="csr")
        return self._get("div", build)

    @property
    def grad(self) -> sp.csr_matrix:
        """Dual gradient (zero wall-normal): cells -> tangential DOFs = -div^T."""
        return self._get("grad", lambda: sp.csr_matrix(-self.div.T))

    @property
    def grad_cov(self) -> sp.csr_matrix:
        """Pressure-gradient covector: cells -> covector, equals vc * grad."""
        return self._get("grad_cov", lambda: sp.csr_matrix(self.vc * self.grad))

    # gradient-entry matrices -------------------------------------------------

    @property
    def grad_entries(self) -> dict:
        """entries[(i, j)]: d v_i / d x_j on the natural staggered position."""
        def build():
            g = self.grid
            nx, ny, nz = g.n_x, g.n_y, g.n_z
            hx, hy, hz = g.h_x, g.h_y, g.h_z
            ix, iy, iz = eye(nx), eye(ny), eye(nz)
            izf = eye(nz + 1)
            jw = inject_w(nz)
            e = {}
            e[("x", "x")] = self.embed_block(kron3(d_periodic_f2c(nx, hx), iy, iz), "x")
            e[("y", "y")] = self.embed_block(kron3(ix, d_periodic_f2c(ny, hy), iz), "y")
            e[("z", "z")] = self.embed_block(kron3(ix, iy, dz_f2c(nz, hz) @ jw), "z")
            e[("x", "y")] = self.embed_block(kron3(ix, d_periodic_c2f(ny, hy), iz), "x")
            e[("y", "x")] = self.embed_block(kron3(d_periodic_c2f(nx, hx), iy, iz), "y")
            e[("x", "z")] = self.embed_block(kron3(ix, iy, dz_c2f(nz, hz)), "x")
            e[("z", "x")] = self.embed_block(kron3(d_periodic_c2f(nx, hx), iy, izf @ jw), "z")
            e[("y", "z")] = self.embed_block(kron3(ix, iy, dz_c2f(nz, hz)), "y")
            e[("z", "y")] = self.embed_block(kron3(ix, d_periodic_c2f(ny, hy), izf @ jw), "z")
            return e
        return self._get("grad_entries", build)

    def position_weight_vector(self, key) -> np.ndarray:
        g = self.grid
        vc = self.vc
        if key in (("x", "x"), ("y", "y"), ("z", "z"), ("x", "y"), ("y", "x")):
            return np.full(g.n_x * g.n_y * g.n_z, vc)
        w = np.full((g.n_x, g.n_y, g.n_z + 1), vc)
        w[:, :, 0] = 0.5 * vc
        w[:, :, -1] = 0.5 * vc
        return w.ravel()

    # trace ------------------------------------------------------------------

    @property
    def trace_mats(self) -> dict:
        """Wall trace extrapolation for the tangential components."""
        def build():
            g = self.grid
            ix, iy = eye(g.n_x), eye(g.n_y)
            out = {}
            for wall in ("bottom", "top"):
                tz = trace_row(g.n_z, wall)
                out[("u", wall)] = self.embed_block(kron3(ix, iy, tz), "x")
                out[("v", wall)] = self.embed_block(kron3(ix, iy, tz), "y")
            return out
        return self._get("trace_mats", build)

    # slip form ----------------------------------------------------------------

    @property
    def form_entries(self) -> dict:
        """Symmetric-gradient entries entering the slip form quadrature.

        The z-shear strips are kept on the interior edge levels only; the
        wall strips are statically condensed into the Robin wall coefficient
        (ghost-layer closure), which keeps the operator second-order
        consistent at the wall rows and the matrix a symmetric Gram form.
        """
        def build():
            g = self.grid
            nx, ny, nz = g.n_x, g.n_y, g.n_z
            hx, hy, hz = g.h_x, g.h_y, g.h_z
            ix, iy = eye(nx), eye(ny)
            izm = eye(nz - 1)
            e = dict(self.grad_entries)
            e[("x", "z")] = self.embed_block(kron3(ix, iy, dz_c2f_strict(nz, hz)), "x")
            e[("z", "x")] = self.embed_block(kron3(d_periodic_c2f(nx, hx), iy, izm), "z")
            e[("y", "z")] = self.embed_block(kron3(ix, iy, dz_c2f_strict(nz, hz)), "y")
            e[("z", "y")] = self.embed_block(kron3(ix, d_periodic_c2f(ny, hy), izm), "z")
            return e
        return self._get("form_entries", build)

    @property
    def wall_layer_mats(self) -> dict:
        """Selectors of the wall-adjacent cell layers of u and v."""
        def build():
            g = self.grid
            ix, iy = eye(g.n_x), eye(g.n_y)
            out = {}
            for comp in ("x", "y"):
                for wall, k in (("bottom", 0), ("top", g.n_z - 1)):
                    sel = sp.lil_matrix((1, g.n_z))
                    sel[0, k] = 1.0
                    out[(comp, wall)] = self.embed_block(
                        kron3(ix, iy, sel.tocsr()), comp)
            return out
        return self._get("wall_layer_mats", build)

    def slip_form(self, nu: float, gamma: float) -> sp.csr_matrix:
        """Assemble <A v, phi> = 2 nu (grad v)_s : (grad phi)_s + gamma wall term.

        Gram structure (symmetric PSD by construction); the wall friction
        enters through the condensed Robin coefficient
        gamma_eff = gamma / (1 + gamma h_z / (2 nu)) acting on the
        wall-adjacent layers, i.e. the ghost-layer slip closure.
        """
        key = ("slip_form", float(nu), float(gamma))
        if key in self._lazy:
            return self._lazy[key]
        e = self.form_entries
        vc = self.vc
        nzsz = self.grid.n_x * self.grid.n_y * (self.grid.n_z - 1)
        terms = []
        for i in COMPONENTS:
            s = e[(i, i)]
            terms.append(2.0 * nu * vc * (s.T @ s))
        d_xy = 0.5 * (e[("x", "y")] + e[("y", "x")])
        terms.append(4.0 * nu * vc * (d_xy.T @ d_xy))
        for (i, j) in (("x", "z"), ("y", "z")):
            d = 0.5 * (e[(i, j)] + e[(j, i)])
            assert d.shape[0] == nzsz
            terms.append(4.0 * nu * vc * (d.T @ d))
        a = terms[0]
        for t in terms[1:]:
            a = a + t
        if gamma > 0:
            g_eff = gamma / (1.0 + gamma * self.grid.h_z / (2.0 * nu))
            ws = self.grid.wall_area_element
            for sel in self.wall_layer_mats.values():
                a = a + g_eff * ws * (sel.T @ sel)
        a = sp.csr_matrix(0.5 * (a + a.T))
        self._lazy[key] = a
        return a

    # advection -----------------------------------------------------------------
    #
    # Flux (control-volume) form: for the component carried at i-faces the
    # transporting velocity is averaged onto the six compact flux positions
    # and differenced back.  Because the face divergence of the averaged
    # transport field is the average of adjacent cell divergences, the skew
    # variant  div(U w) - w (div U)/2  pairs to exactly zero against the
    # transported field for every tangential transport field, and the
    # advective variant annihilates constants pointwise.

    @property
    def flux_ops(self) -> dict:
        """ops[(i, j)] = (difference_back, avg_transport, avg_carried)."""
        def build():
            g = self.grid
            nx, ny, nz = g.n_x, g.n_y, g.n_z
            hx, hy, hz = g.h_x, g.h_y, g.h_z
            ix, iy, iz = eye(nx), eye(ny), eye(nz)
            izm, izf = eye(nz - 1), eye(nz + 1)
            jw = inject_w(nz)
            ops = {}
            # u-momentum
            ops[("x", "x")] = (kron3(d_periodic_c2f(nx, hx), iy, iz),
                               self.embed_block(kron3(a_periodic_f2c(nx), iy, iz), "x"),
                               kron3(a_periodic_f2c(nx), iy, iz))
            ops[("x", "y")] = (kron3(ix, d_periodic_f2c(ny, hy), iz),
                               self.embed_block(kron3(a_periodic_c2f(nx), iy, iz), "y"),
                               kron3(ix, a_periodic_c2f(ny), iz))
            ops[("x", "z")] = (kron3(ix, iy, dz_f2c(nz, hz)),
                               self.embed_block(kron3(a_periodic_c2f(nx), iy, izf) @
                                                kron3(ix, iy, jw), "z"),
                               kron3(ix, iy, az_c2f_full(nz)))
            # v-momentum
            ops[("y", "x")] = (kron3(d_periodic_f2c(nx, hx), iy, iz),
                               self.embed_block(kron3(ix, a_periodic_c2f(ny), iz), "x"),
                               kron3(a_periodic_c2f(nx), iy, iz))
            ops[("y", "y")] = (kron3(ix, d_periodic_c2f(ny, hy), iz),
                               self.embed_block(kron3(ix, a_periodic_f2c(ny), iz), "y"),
                               kron3(ix, a_periodic_f2c(ny), iz))
            ops[("y", "z")] = (kron3(ix, iy, dz_f2c(nz, hz)),
                               self.embed_block(kron3(ix, a_periodic_c2f(ny), izf) @
                                                kron3(ix, iy, jw), "z"),
                               kron3(ix, iy, az_c2f_full(nz)))
            # w-momentum (interior face rows)
            ops[("z", "x")] = (kron3(d_periodic_f2c(nx, hx), iy, izm),
                               self.embed_block(kron3(ix, iy, az_c2f_interior(nz)), "x"),
                               kron3(a_periodic_c2f(nx), iy, izm))
            ops[("z", "y")] = (kron3(ix, d_periodic_f2c(ny, hy), izm),
                               self.embed_block(kron3(ix, iy, az_c2f_interior(nz)), "y"),
                               kron3(ix, a_periodic_c2f(ny), izm))
            ops[("z", "z")] = (kron3(ix, iy, dz_c2f_strict(nz, hz)),
                               self.embed_block(kron3(ix, iy, az_f2c(nz) @ jw), "z"),
                               kron3(ix, iy, az_f2c(nz) @ jw))
            return ops
        return self._get("flux_ops", build)

    def _comp_block(self, x: np.ndarray, comp: str) -> np.ndarray:
        if comp == "x":
            return x[:self.nu_dof]
        if comp == "y":
            return x[self.nu_dof:2 * self.nu_dof]
        return x[2 * self.nu_dof:]

    def advection_matrix(self, x_v: np.ndarray, form: str = "skew") -> sp.csr_matrix:
        """Matrix w -> values of the convection of w by v at the faces of w.

        form="divergence": div(U w); "advective": div(U w) - w div U;
        "skew": div(U w) - w (div U)/2 (energy neutral).
        """
        ops = self.flux_ops
        blocks = []
        for comp in COMPONENTS:
            acc = None
            face_div = None
            for direction in COMPONENTS:
                dback, avg_u, avg_w = ops[(comp, direction)]
                u_flux = avg_u @ x_v
                term = dback @ sp.diags(u_flux) @ avg_w
                acc = term if acc is None else acc + term
                fd = dback @ u_flux
                face_div = fd if face_div is None else face_div + fd
            if form == "divergence":
                pass
            elif form == "advective":
                acc = acc - sp.diags(face_div)
            elif form == "skew":
                acc = acc - 0.5 * sp.diags(face_div)
            else:
                raise ValueError(f"unknown convection form {form!r}")
            blocks.append(acc)
        # each block maps the component DOFs of w; widen to the full vector
        full = []
        offs = {"x": (0, self.nu_dof), "y": (self.nu_dof, self.nu_dof),
                "z": (2 * self.nu_dof, self.nw_dof)}
        for b, comp in zip(blocks, COMPONENTS):
            off, n = offs[comp]
            left = sp.csr_matrix((b.shape[0], off))
            right = sp.csr_matrix((b.shape[0], self.n_tan - off - n))
            full.append(sp.hstack([left, b, right], format="csr"))
        return sp.vstack(full, format="csr")

    def skew_advection_cov(self, x_v: np.ndarray, x_w: np.ndarray) -> np.ndarray:
        """Covector of the skew convection form b(v, w, .)."""
        return self.vc * (self.advection_matrix(x_v, "skew") @ x_w)

    def skew_advection_matrix(self, x_v: np.ndarray) -> sp.csr_matrix:
        """Matrix w -> covector of b(v, w, .)."""
        return sp.csr_matrix(self.vc * self.advection_matrix(x_v, "skew"))

    # component Laplacians (diagnostic) -----------------------------------------

    @property
    def vec_laplacian(self) -> sp.csr_matrix:
        """Componentwise Laplacian of a tangential field at its own faces."""
        def build():
            g = self.grid
            nx, ny, nz = g.n_x, g.n_y, g.n_z
            hx, hy, hz = g.h_x, g.h_y, g.h_z
            ix, iy, iz = eye(nx), eye(ny), eye(nz)
            izm = eye(nz - 1)
            jw = inject_w(nz)
            lap_u = (kron3(d2_periodic(nx, hx), iy, iz)
                     + kron3(ix, d2_periodic(ny, hy), iz)
                     + kron3(ix, iy, d2z_centerlike(nz, hz)))
            lap_v = (kron3(d2_periodic(nx, hx), iy, iz)
                     + kron3(ix, d2_periodic(ny, hy), iz)
                     + kron3(ix, iy, d2z_centerlike(nz, hz)))
            lap_w = (kron3(d2_periodic(nx, hx), iy, izm)
                     + kron3(ix, d2_periodic(ny, hy), izm)
                     + kron3(ix, iy, d2z_faceint(nz, hz) @ jw))
            rows = [self.embed_block(lap_u, "x"), self.embed_block(lap_v, "y"),
                    self.embed_block(lap_w, "z")]
            return sp.vstack(rows, format="csr")
        return self._get("vec_laplacian", build)


def operator_cache(grid: Grid) -> OperatorCache:
    key = (grid.n_x, grid.n_y, grid.n_z, grid.L_x, grid.L_y, grid.H)
    if key not in _CACHE:
        _CACHE[key] = OperatorCache(grid)
    return _CACHE[key]
