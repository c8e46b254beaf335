"""Vertex-centered linear elasticity on rectilinear quad meshes.

Plane-strain solver with Biot pressure coupling for the field problems, and
an axisymmetric solver for column compression tests. Both use bilinear
quadrilaterals with 2x2 Gauss quadrature and a direct sparse factorization
that is reused as long as the stiffness is unchanged (moduli change only
through prescribed mineralization, never during a run).

Sign conventions: tension positive; stresses stored as component triples
(sxx, syy, sxy) plus the out-of-plane component.

The solver works in incremental form: given the accumulated stress of the
previous state, each solve returns a displacement increment in equilibrium
with the load, pressure and eigenstress increments.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.linalg import splu

from .mesh import StructuredGrid

_GAUSS = 1.0 / np.sqrt(3.0)
_GP = [(-_GAUSS, -_GAUSS), (_GAUSS, -_GAUSS), (_GAUSS, _GAUSS), (-_GAUSS, _GAUSS)]


class MechanicsError(RuntimeError):
    pass


@dataclass
class MechState:
    """Accumulated mechanical state between time steps."""

    u: np.ndarray            # (n_verts, 2) displacement since initialization
    sigma: np.ndarray        # (n_cells, 3) accumulated skeleton stress
    sigma_zz: np.ndarray     # (n_cells,)
    eps_v: np.ndarray        # (n_cells,) cumulative volume strain
    p_eff_ref: np.ndarray    # (n_cells,) pressure at last equilibration

    def copy(self) -> "MechState":
        return MechState(self.u.copy(), self.sigma.copy(), self.sigma_zz.copy(),
                         self.eps_v.copy(), self.p_eff_ref.copy())


@dataclass
class MechBCs:
    """Dirichlet / traction / tied-plate boundary data.

    ``dirichlet`` maps dof index -> prescribed total displacement (the
    incremental solver prescribes zero increments for these). ``tractions``
    are (side, tx, ty) applied on whole boundary sides. ``tied_uy_side``
    turns the vertical dofs of one side into a single rigid-plate dof loaded
    by ``tied_force`` (per unit depth, positive upward).
    """

    dirichlet: dict[int, float] = field(default_factory=dict)
    tractions: list[tuple[str, float, float]] = field(default_factory=list)
    tied_uy_side: str | None = None
    tied_force: float = 0.0


def roller_fixed_bcs(grid: StructuredGrid, sides=("left", "right"),
                     fixed=("bottom",)) -> MechBCs:
    """Rollers (zero normal displacement) on ``sides``, pinned ``fixed``."""
    bc = MechBCs()
    for side in sides:
        for v in grid.boundary_vertices(side):
            dof = 2 * int(v) + (0 if side in ("left", "right") else 1)
            bc.dirichlet[dof] = 0.0
    for side in fixed:
        for v in grid.boundary_vertices(side):
            bc.dirichlet[2 * int(v)] = 0.0
            bc.dirichlet[2 * int(v) + 1] = 0.0
    return bc


def _element_b_matrices(grid: StructuredGrid):
    """B (n_cells, 4 gp, 3, 8) and per-element integrated B (n_cells, 3, 8)."""
    n = grid.n_cells
    a = grid.dx
    b = grid.dy
    bmats = np.zeros((n, 4, 3, 8))
    signs = [(-1, -1), (1, -1), (1, 1), (-1, 1)]  # CCW vertex order
    for g, (xi, eta) in enumerate(_GP):
        for i, (sx, sy) in enumerate(signs):
            dndx = sx * (1.0 + sy * eta) / 4.0 * (2.0 / a)
            dndy = sy * (1.0 + sx * xi) / 4.0 * (2.0 / b)
            bmats[:, g, 0, 2 * i] = dndx
            bmats[:, g, 1, 2 * i + 1] = dndy
            bmats[:, g, 2, 2 * i] = dndy
            bmats[:, g, 2, 2 * i + 1] = dndx
    w = (grid.vol / 4.0)[:, None, None]
    b_int = (bmats * w[..., None]).sum(axis=1)
    return bmats, b_int


class PlaneStrainFEM:
    """Assembled plane-strain problem with pressure and eigenstress loads."""

    def __init__(self, grid: StructuredGrid, lam: np.ndarray, g: np.ndarray,
                 bcs: MechBCs):
        self.grid = grid
        self.lam = np.asarray(lam, float)
        self.g = np.asarray(g, float)
        self.bcs = bcs
        self._build_dofmap()
        self._assemble()

    # -- structure -----------------------------------------------------
    def _build_dofmap(self):
        grid, bcs = self.grid, self.bcs
        n_dofs = 2 * grid.n_verts
        eq = np.arange(n_dofs)
        self.tied_master = None
        if bcs.tied_uy_side is not None:
            tied = [2 * int(v) + 1 for v in grid.boundary_vertices(bcs.tied_uy_side)]
            master = tied[0]
            eq[tied] = master
            self.tied_master = master
        # compress equation ids
        uniq, inv = np.unique(eq, return_inverse=True)
        self.eqmap = inv
        self.n_eq = len(uniq)
        fixed = np.zeros(self.n_eq, bool)
        fixed_val = np.zeros(self.n_eq)
        for dof, val in bcs.dirichlet.items():
            fixed[self.eqmap[dof]] = True
            fixed_val[self.eqmap[dof]] = val
        self.fixed = fixed
        self.fixed_val = fixed_val
        self.free = ~fixed
        if self.free.sum() == 0:
            raise MechanicsError("all degrees of freedom constrained")

    def _assemble(self):
        grid = self.grid
        bmats, b_int = _element_b_matrices(grid)
        self.b_int = b_int
        self.b_avg = b_int / grid.vol[:, None, None]
        d = np.zeros((grid.n_cells, 3, 3))
        d[:, 0, 0] = d[:, 1, 1] = self.lam + 2.0 * self.g
        d[:, 0, 1] = d[:, 1, 0] = self.lam
        d[:, 2, 2] = self.g
        self.d_voigt = d
        w = grid.vol / 4.0
        ke = np.einsum("egki,ekl,eglj,e->eij", bmats, d, bmats, w, optimize=True)

        dofs = np.empty((grid.n_cells, 8), int)
        dofs[:, 0::2] = 2 * grid.cell_verts
        dofs[:, 1::2] = 2 * grid.cell_verts + 1
        self.cell_dofs = dofs
        eqs = self.eqmap[dofs]
        rows = np.repeat(eqs, 8, axis=1).ravel()
        cols = np.tile(eqs, (1, 8)).ravel()
        k = coo_matrix((ke.ravel(), (rows, cols)), shape=(self.n_eq, self.n_eq)).tocsc()
        self.k_full = k
        free_idx = np.flatnonzero(self.free)
        self.free_idx = free_idx
        self.k_ff = k[free_idx][:, free_idx].tocsc()
        self.k_fc = k[free_idx][:, np.flatnonzero(self.fixed)].tocsc()
        self._lu = None

    @property
    def lu(self):
        if self._lu is None:
            try:
                self._lu = splu(self.k_ff)
            except RuntimeError as exc:
                raise MechanicsError(f"underconstrained mechanics: {exc}") from exc
            udiag = np.abs(self._lu.U.diagonal())
            if udiag.min() < 1e-12 * max(udiag.max(), 1.0):
                raise MechanicsError(
                    "underconstrained mechanics: stiffness matrix is singular "
                    "(missing boundary conditions?)")
        return self._lu

    # -- load vectors ----------------------------------------------------
    def load_pressure(self, biot_dp: np.ndarray) -> np.ndarray:
        """Equivalent nodal forces of a cellwise pressure change biot*dp."""
        f_el = np.einsum("e,ei->ei", biot_dp, self.b_int[:, 0, :] + self.b_int[:, 1, :])
        return self._scatter(f_el)

    def load_eigenstress(self, stress_voigt: np.ndarray) -> np.ndarray:
        """Nodal forces of a prescribed cellwise stress triple (sxx, syy, sxy)."""
        f_el = -np.einsum("eki,ek->ei", self.b_int, stress_voigt)
        return self._scatter(f_el)

    def load_body(self, rho: np.ndarray, gravity: float) -> np.ndarray:
        """Consistent nodal loads of the weight rho*g (downward)."""
        f_el = np.zeros((self.grid.n_cells, 8))
        f_el[:, 1::2] = (-rho * gravity * self.grid.vol / 4.0)[:, None]
        return self._scatter(f_el)

    def load_tractions(self) -> np.ndarray:
        f = np.zeros(self.n_eq)
        grid = self.grid
        for entry in self.bcs.tractions:
            side, tx, ty = entry[:3]
            lo, hi = (entry[3], entry[4]) if len(entry) == 5 else (-np.inf, np.inf)
            verts = grid.boundary_vertices(side)
            coords = grid.x if side in ("bottom", "top") else grid.y
            mids = 0.5 * (coords[:-1] + coords[1:])
            seg = np.diff(coords)
            for i, length in enumerate(seg):
                if not (lo <= mids[i] <= hi):
                    continue
                for v in (verts[i], verts[i + 1]):
                    f[self.eqmap[2 * int(v)]] += 0.5 * length * tx
                    f[self.eqmap[2 * int(v) + 1]] += 0.5 * length * ty
        if self.tied_master is not None:
            f[self.eqmap[self.tied_master]] += self.bcs.tied_force
        return f

    def _scatter(self, f_el: np.ndarray) -> np.ndarray:
        f = np.zeros(self.n_eq)
        np.add.at(f, self.eqmap[self.cell_dofs].ravel(), f_el.ravel())
        return f

    # -- solve -----------------------------------------------------------
    def solve(self, rhs: np.ndarray, dirichlet_vals: np.ndarray | None = None) -> np.ndarray:
        """Displacements for the given equation-space load vector.

        Returns the (n_verts, 2) field; tied dofs are expanded back.
        """
        xc = self.fixed_val if dirichlet_vals is None else dirichlet_vals
        b = rhs[self.free_idx] - self.k_fc @ xc[self.fixed]
        x = np.zeros(self.n_eq)
        x[self.free_idx] = self.lu.solve(b)
        x[self.fixed] = xc[self.fixed]
        if not np.all(np.isfinite(x)):
            raise MechanicsError("mechanics solve produced non-finite values")
        u = x[self.eqmap].reshape(-1, 2)
        return u

    # -- post ------------------------------------------------------------
    def cell_strain_increment(self, du: np.ndarray) -> np.ndarray:
        """Cell-averaged strain increments (exx, eyy, gxy)."""
        ue = du.reshape(-1)[self.cell_dofs]
        return np.einsum("eki,ei->ek", self.b_avg, ue)

    def cell_stress_increment(self, du: np.ndarray, drops: np.ndarray | None = None):
        """Cell-averaged skeleton stress increments and volume strain.

        ``drops`` is an optional (n_cells, 3) eigenstress added to the
        elastic increment (the stress-drop correction).
        Returns (dsigma (n_cells, 3), dsigma_zz, deps_v).
        """
        eps = self.cell_strain_increment(du)
        dsig = np.einsum("ekl,el->ek", self.d_voigt, eps)
        if drops is not None:
            dsig = dsig + drops
        deps_v = eps[:, 0] + eps[:, 1]
        dsig_zz = self.lam * deps_v
        return dsig, dsig_zz, deps_v


def initialize_insitu(fem: PlaneStrainFEM, biot: np.ndarray, p_eff: np.ndarray,
                      rho: np.ndarray, gravity: float,
                      tensile_cutoff: np.ndarray | None = None,
                      max_cutoff_iters: int = 300) -> MechState:
    """Equilibrium state under gravity, boundary loads and pore pressure.

    Solves the non-incremental momentum balance, then iteratively clamps
    tensile principal stresses (re-equilibrating each pass) until no cell
    exceeds its cutoff. The returned state is the reference for all later
    incremental steps.
    """
    from .failure import tension_cutoff  # local import to avoid cycle

    rhs = fem.load_pressure(biot * p_eff) + fem.load_body(rho, gravity) \
        + fem.load_tractions()
    u = fem.solve(rhs)
    sig, sig_zz, eps_v = fem.cell_stress_increment(u)

    if tensile_cutoff is not None:
        # successive clamping with over-relaxation; each pass costs one
        # back-substitution of the cached factorization
        corr = np.zeros_like(sig)
        scale = max(np.max(np.abs(sig)), 1.0)
        omega = 1.8
        for _ in range(max_cutoff_iters):
            mean = 0.5 * (sig[:, 0] + sig[:, 1])
            radius = np.hypot(0.5 * (sig[:, 0] - sig[:, 1]), sig[:, 2])
            violation = np.max(mean + radius - tensile_cutoff)
            if violation <= max(1e-4 * scale, 1.0):
                break
            cxx, cyy, cxy = tension_cutoff(sig[:, 0], sig[:, 1], sig[:, 2],
                                           tensile_cutoff)
            corr += omega * (np.column_stack([cxx, cyy, cxy]) - sig)
            u = fem.solve(rhs + fem.load_eigenstress(corr))
            sig, sig_zz, eps_v = fem.cell_stress_increment(u)
            sig = sig + corr
        else:
            raise MechanicsError(
                "tension cutoff did not settle (tension may be statically "
                "required by the boundary loads)")

    return MechState(u=u, sigma=sig, sigma_zz=sig_zz,
                     eps_v=np.zeros(fem.grid.n_cells),
                     p_eff_ref=np.asarray(p_eff, float).copy())


# ---------------------------------------------------------------------------
# axisymmetric column solver
# ---------------------------------------------------------------------------

class AxisymmetricFEM:
    """Axisymmetric elasticity on a rectangular (r, z) mesh.

    Strain ordering (e_r, e_z, e_theta, g_rz); the hoop row uses N/r at the
    Gauss radius, which never vanishes for interior quadrature points, so the
    axis needs no special treatment beyond the u_r = 0 constraint.
    """

    def __init__(self, grid: StructuredGrid, e_mod: np.ndarray, nu: np.ndarray,
                 dirichlet: dict[int, float]):
        self.grid = grid
        self.e_mod = np.asarray(e_mod, float)
        self.nu = np.asarray(nu, float)
        self.dirichlet = dict(dirichlet)
        self._assemble()

    def _assemble(self):
        grid = self.grid
        n = grid.n_cells
        a = grid.dx
        b = grid.dy
        rc = grid.cx
        signs = [(-1, -1), (1, -1), (1, 1), (-1, 1)]
        e, nu = self.e_mod, self.nu
        c = e / ((1.0 + nu) * (1.0 - 2.0 * nu))
        d = np.zeros((n, 4, 4))
        for i in range(3):
            for j in range(3):
                d[:, i, j] = c * (nu + (i == j) * (1.0 - 2.0 * nu))
        d[:, 3, 3] = c * (1.0 - 2.0 * nu) / 2.0
        self.d_voigt = d

        ke = np.zeros((n, 8, 8))
        b_sum = np.zeros((n, 4, 8))
        wsum = np.zeros(n)
        for xi, eta in _GP:
            bm = np.zeros((n, 4, 8))
            r_gp = rc + 0.5 * a * xi
            for i, (sx, sy) in enumerate(signs):
                shape = (1.0 + sx * xi) * (1.0 + sy * eta) / 4.0
                dndr = sx * (1.0 + sy * eta) / 4.0 * (2.0 / a)
                dndz = sy * (1.0 + sx * xi) / 4.0 * (2.0 / b)
                bm[:, 0, 2 * i] = dndr
                bm[:, 1, 2 * i + 1] = dndz
                bm[:, 2, 2 * i] = shape / r_gp
                bm[:, 3, 2 * i] = dndz
                bm[:, 3, 2 * i + 1] = dndr
            w = (a * b / 4.0) * r_gp  # volume element r dr dz (2*pi dropped)
            ke += np.einsum("eki,ekl,elj,e->eij", bm, d, bm, w, optimize=True)
            b_sum += bm * w[:, None, None]
            wsum += w
        self.b_avg = b_sum / wsum[:, None, None]

        dofs = np.empty((n, 8), int)
        dofs[:, 0::2] = 2 * grid.cell_verts
        dofs[:, 1::2] = 2 * grid.cell_verts + 1
        self.cell_dofs = dofs
        rows = np.repeat(dofs, 8, axis=1).ravel()
        cols = np.tile(dofs, (1, 8)).ravel()
        n_dofs = 2 * grid.n_verts
        k = coo_matrix((ke.ravel(), (rows, cols)), shape=(n_dofs, n_dofs)).tocsc()
        fixed = np.zeros(n_dofs, bool)
        vals = np.zeros(n_dofs)
        for dof, val in self.dirichlet.items():
            fixed[dof] = True
            vals[dof] = val
        self.fixed, self.fixed_val = fixed, vals
        self.free_idx = np.flatnonzero(~fixed)
        self.k_ff = k[self.free_idx][:, self.free_idx].tocsc()
        self.k_fc = k[self.free_idx][:, np.flatnonzero(fixed)].tocsc()
        self.lu = splu(self.k_ff)

    def solve(self, dirichlet_scale: float = 1.0) -> np.ndarray:
        """Displacements with the Dirichlet table scaled by ``dirichlet_scale``."""
        vals = self.fixed_val * dirichlet_scale
        b = -self.k_fc @ vals[self.fixed]
        x = np.zeros(2 * self.grid.n_verts)
        x[self.free_idx] = self.lu.solve(b)
        x[self.fixed] = vals[self.fixed]
        return x.reshape(-1, 2)

    def cell_stress(self, u: np.ndarray) -> np.ndarray:
        """Cell-averaged (s_r, s_z, s_theta, t_rz)."""
        ue = u.reshape(-1)[self.cell_dofs]
        eps = np.einsum("eki,ei->ek", self.b_avg, ue)
        return np.einsum("ekl,el->ek", self.d_voigt, eps)
