"""Cell-centered two-point-flux finite volume solver for two-phase flow.

Primary variables per cell: wetting pressure p_w and nonwetting saturation
S_n. Implicit Euler in time, Newton linearization with a finite difference
Jacobian assembled by stencil coloring (five colors for the 5-point stencil,
two variables per cell, so eleven residual evaluations per Jacobian).

Face transmissibilities use harmonic permeability averaging with distance
weighting; mobilities and the flux density are upwinded by the sign of the
phase potential difference; gravity uses the arithmetic face density.

The accumulation term tracks the pore volume exactly: mass per cell is
(1 + eps_v) * phi * rho * S * V with eps_v the cumulative volume strain, so
that in the linear limit the storage reduces to the standard poroelastic
form. The fixed-stress stabilization adds, per phase,
fss * biot^2/K * S_alpha rho_alpha (p_eff - p_eff_outer) V / dt.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csc_matrix
from scipy.sparse.linalg import splu

from .constitutive import (GasModel, WaterModel, vg_capillary_pressure,
                           vg_relative_permeabilities)
from .mesh import StructuredGrid


class FlowNonConvergence(RuntimeError):
    """Newton failed; the caller should retry with a smaller time step."""


@dataclass
class RetentionFields:
    """Per-cell retention parameter arrays (zone values scattered to cells)."""

    vg_alpha: np.ndarray
    vg_n: np.ndarray
    s_wr: np.ndarray
    s_nr: np.ndarray
    se_reg: np.ndarray

    def capillary_pressure(self, sw):
        return vg_capillary_pressure(self.vg_alpha, self.vg_n, self.s_wr,
                                     self.s_nr, self.se_reg, sw)

    def relative_permeabilities(self, sw):
        return vg_relative_permeabilities(self.vg_n, self.s_wr, self.s_nr, sw)


@dataclass
class DirichletFaces:
    """Boundary faces with prescribed phase state on the outside."""

    cells: np.ndarray      # interior cell per face
    trans: np.ndarray      # geometric transmissibility area*k/d
    p_w: np.ndarray        # boundary wetting pressure
    s_n: np.ndarray        # boundary nonwetting saturation
    dz: np.ndarray         # z(boundary) - z(cell)


@dataclass
class SourceSpec:
    """Mass sources per cell (kg/s), one array per phase."""

    q_w: np.ndarray
    q_n: np.ndarray


@dataclass
class PhaseState:
    """Primary variables of the flow subproblem."""

    p_w: np.ndarray
    s_n: np.ndarray

    def copy(self) -> "PhaseState":
        return PhaseState(self.p_w.copy(), self.s_n.copy())


@dataclass
class FlowProblem:
    grid: StructuredGrid
    perm: np.ndarray
    retention: RetentionFields
    water: WaterModel
    gas: GasModel
    gravity: float = 0.0
    dirichlet: DirichletFaces | None = None
    sources: SourceSpec | None = None
    newton_max_iter: int = 12
    newton_atol: float = 1e-8
    newton_rtol: float = 1e-6
    fd_eps: float = 1e-7
    max_ds_n: float = 0.25

    _tg: np.ndarray = field(init=False, default=None)
    _colors: list = field(init=False, default=None)

    def __post_init__(self):
        g = self.grid
        fc = g.face_cells
        k = self.perm
        # harmonic two-point transmissibility with distance weighting
        self._tg = g.face_area / (g.face_dl / k[fc[:, 0]] + g.face_dr / k[fc[:, 1]])
        self._build_coloring()
        if self.sources is None:
            self.sources = SourceSpec(np.zeros(g.n_cells), np.zeros(g.n_cells))

    # -- coloring ---------------------------------------------------------
    def _build_coloring(self):
        g = self.grid
        n = g.n_cells
        ix, iy = g.cell_ij(np.arange(n))
        color = (ix + 2 * iy) % 5
        nbrs = [[] for _ in range(n)]
        for l, r in g.face_cells:
            nbrs[l].append(r)
            nbrs[r].append(l)
        groups = []
        for c in range(5):
            cells = np.flatnonzero(color == c)
            rows, owner = [], []
            for j in cells:
                stencil = [j] + nbrs[j]
                rows.extend(stencil)
                owner.extend([j] * len(stencil))
            groups.append((cells, np.asarray(rows, int), np.asarray(owner, int)))
        self._colors = groups

    # -- physics ----------------------------------------------------------
    def secondary(self, p_w, s_n):
        """Derived fields: (s_w, p_c, p_n, rho_w, rho_n, mob_w, mob_n, p_eff)."""
        s_w = 1.0 - s_n
        p_c = self.retention.capillary_pressure(s_w)
        p_n = p_w + p_c
        rho_w = self.water.density(p_w)
        rho_n = self.gas.density(p_n)
        krw, krn = self.retention.relative_permeabilities(s_w)
        mob_w = krw / self.water.viscosity(p_w)
        mob_n = krn / self.gas.viscosity(p_n)
        p_eff = s_w * p_w + s_n * p_n
        return s_w, p_c, p_n, rho_w, rho_n, mob_w, mob_n, p_eff

    def phase_mass(self, p_w, s_n, phi, one_plus_epsv):
        """Per-cell (m_w, m_n) in kg for the given porosity/strain fields."""
        s_w, _, p_n, rho_w, rho_n, _, _, _ = self.secondary(p_w, s_n)
        pv = one_plus_epsv * phi * self.grid.vol
        return pv * rho_w * s_w, pv * rho_n * s_n

    def residual(self, p_w, s_n, mass_prev_w, mass_prev_n, dt, phi,
                 one_plus_epsv, fss_coeff=0.0, biot2_over_k=None,
                 p_eff_outer=None):
        """Interleaved residual [w_0, n_0, w_1, n_1, ...] in kg/s."""
        g = self.grid
        s_w, p_c, p_n, rho_w, rho_n, mob_w, mob_n, p_eff = self.secondary(p_w, s_n)
        pv = one_plus_epsv * phi * g.vol
        res_w = (pv * rho_w * s_w - mass_prev_w) / dt - self.sources.q_w
        res_n = (pv * rho_n * s_n - mass_prev_n) / dt - self.sources.q_n

        if fss_coeff != 0.0:
            stab = fss_coeff * biot2_over_k * (p_eff - p_eff_outer) * g.vol / dt
            res_w = res_w + s_w * rho_w * stab
            res_n = res_n + s_n * rho_n * stab

        il = g.face_cells[:, 0]
        ir = g.face_cells[:, 1]
        dz = g.face_dz
        for (rho, mob, p) in ((rho_w, mob_w, p_w), (rho_n, mob_n, p_n)):
            rho_face = 0.5 * (rho[il] + rho[ir])
            dpot = p[il] - p[ir] - rho_face * self.gravity * dz
            up = np.where(dpot >= 0.0, il, ir)
            flux = self._tg * mob[up] * rho[up] * dpot
            target = res_w if rho is rho_w else res_n
            np.add.at(target, il, flux)
            np.add.at(target, ir, -flux)

        if self.dirichlet is not None:
            b = self.dirichlet
            sb_w = 1.0 - b.s_n
            pc_b = vg_capillary_pressure(
                self.retention.vg_alpha[b.cells], self.retention.vg_n[b.cells],
                self.retention.s_wr[b.cells], self.retention.s_nr[b.cells],
                self.retention.se_reg[b.cells], sb_w)
            pn_b = b.p_w + pc_b
            krw_b, krn_b = vg_relative_permeabilities(
                self.retention.vg_n[b.cells], self.retention.s_wr[b.cells],
                self.retention.s_nr[b.cells], sb_w)
            rho_wb = self.water.density(b.p_w)
            rho_nb = self.gas.density(pn_b)
            for (p, pb, rho, rhob, mob, mobb, target) in (
                (p_w, b.p_w, rho_w, rho_wb, mob_w,
                 krw_b / self.water.viscosity(b.p_w), res_w),
                (p_n, pn_b, rho_n, rho_nb, mob_n,
                 krn_b / self.gas.viscosity(pn_b), res_n),
            ):
                rho_face = 0.5 * (rho[b.cells] + rhob)
                dpot = p[b.cells] - pb - rho_face * self.gravity * b.dz
                mob_up = np.where(dpot >= 0.0, mob[b.cells], mobb)
                rho_up = np.where(dpot >= 0.0, rho[b.cells], rhob)
                flux = b.trans * mob_up * rho_up * dpot
                np.add.at(target, b.cells, flux)

        res = np.empty(2 * g.n_cells)
        res[0::2] = res_w
        res[1::2] = res_n
        if not np.all(np.isfinite(res)):
            bad = np.flatnonzero(~np.isfinite(res))[:5]
            raise FlowNonConvergence(f"non-finite residual at rows {bad.tolist()}")
        return res

    def _residual_scale(self, phi, dt):
        pv = np.maximum(phi, 1e-3) * self.grid.vol
        sc = np.empty(2 * self.grid.n_cells)
        sc[0::2] = pv * self.water.rho0 / dt
        sc[1::2] = pv * self.gas.rho_ref / dt
        return sc

    def jacobian(self, p_w, s_n, base_res, res_args) -> csc_matrix:
        """Finite difference Jacobian by 5-coloring, 2 variables per cell."""
        n = self.grid.n_cells
        rows_all, cols_all, vals_all = [], [], []
        for var in (0, 1):
            x = p_w if var == 0 else s_n
            eps_cell = self.fd_eps * (np.abs(x) + (1e4 if var == 0 else 1.0))
            for cells, rows, owner in self._colors:
                xp = x.copy()
                xp[cells] += eps_cell[cells]
                if var == 0:
                    r = self.residual(xp, s_n, *res_args)
                else:
                    r = self.residual(p_w, xp, *res_args)
                dr = r - base_res
                col = 2 * owner + var
                for ph in (0, 1):
                    rr = 2 * rows + ph
                    rows_all.append(rr)
                    cols_all.append(col)
                    vals_all.append(dr[rr] / eps_cell[owner])
        rows = np.concatenate(rows_all)
        cols = np.concatenate(cols_all)
        vals = np.concatenate(vals_all)
        keep = vals != 0.0
        return csc_matrix((vals[keep], (rows[keep], cols[keep])),
                          shape=(2 * n, 2 * n))

    def newton_solve(self, state: PhaseState, mass_prev_w, mass_prev_n, dt,
                     phi, one_plus_epsv, fss_coeff=0.0, biot2_over_k=None,
                     p_eff_outer=None) -> tuple[PhaseState, int]:
        """Solve one implicit step; returns (state, iterations).

        Raises :class:`FlowNonConvergence` when the scaled residual fails to
        meet tolerance within the iteration budget (caller halves dt).
        """
        p = state.p_w.copy()
        s = state.s_n.copy()
        args = (mass_prev_w, mass_prev_n, dt, phi, one_plus_epsv,
                fss_coeff, biot2_over_k, p_eff_outer)
        scale = self._residual_scale(phi, dt)
        norm0 = None
        for it in range(self.newton_max_iter):
            res = self.residual(p, s, *args)
            norm = np.max(np.abs(res / scale))
            if norm0 is None:
                norm0 = max(norm, 1e-300)
            if norm < self.newton_atol or norm < self.newton_rtol * norm0:
                return PhaseState(p, s), it
            jac = self.jacobian(p, s, res, args)
            try:
                dx = splu(jac).solve(-res)
            except RuntimeError as exc:
                raise FlowNonConvergence(f"singular flow Jacobian: {exc}") from exc
            dp = dx[0::2]
            ds = dx[1::2]
            ds_max = np.max(np.abs(ds)) if len(ds) else 0.0
            if ds_max > self.max_ds_n:
                f = self.max_ds_n / ds_max
                dp, ds = f * dp, f * ds
            p = p + dp
            s = np.clip(s + ds, 0.0, 1.0)
        raise FlowNonConvergence(
            f"no convergence in {self.newton_max_iter} Newton iterations "
            f"(scaled residual {norm:.3e})"
        )
