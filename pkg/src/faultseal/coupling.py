"""Sequential (fixed-stress) and monolithic coupling of flow and mechanics,
plus the simulation workflow with trial / stress-drop failure handling.

One time step of the split scheme:

1. flow solve with the porosity and volume strain of the latest outer
   iterate, stabilized by the fixed-stress storage term biot^2/K;
2. incremental mechanics solve with the updated effective pore pressure;
3. porosity update from the mean-stress law; repeat until the outer
   pressure and displacement increments are below tolerance.

The workflow advances in time with a trial pattern: each step is first
solved without stress drops; if any monitored cell violates the Coulomb
criterion, the same step is re-solved with the prescribed shear-stress drop
applied at the failed cells, the slip between both solutions is recorded as
a seismic event, injection stops and the step size drops to the failure
resolution value until no further cells fail.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csc_matrix
from scipy.sparse.linalg import splu

from .failure import (FailureParams, SeismicEvent, check_shear_failure,
                      compute_slip, safety_margin, seismic_event,
                      stress_drop_correction)
from .flow import FlowNonConvergence, FlowProblem, PhaseState
from .mechanics import MechState, PlaneStrainFEM
from .mesh import FaultCell, FaultDescriptor

logger = logging.getLogger(__name__)


class CouplingError(RuntimeError):
    pass


def effective_porosity(phi0, k_bulk, biot_alpha, dp_t):
    """Porosity under a mean effective compression change dp_t.

    phi = (K phi0 - alpha dp_t) / (K - dp_t); satisfies
    K (phi - phi0) + (alpha - phi) dp_t = 0 exactly.
    """
    phi0 = np.asarray(phi0, float)
    denom = k_bulk - dp_t
    if np.any(denom <= 0.0):
        raise CouplingError("porosity law out of range (K - dp_T <= 0)")
    phi = (k_bulk * phi0 - biot_alpha * dp_t) / denom
    return float(phi) if phi.ndim == 0 else phi


@dataclass(frozen=True)
class SplitSettings:
    scheme: str = "fixed_stress"       # or "monolithic"
    max_outer: int = 40
    tol_p: float = 10.0                # Pa, outer pressure increment
    tol_u: float = 1e-9                # m, outer displacement increment
    dt_init: float = 1e3
    dt_max: float = 86400.0
    growth: float = 1.3
    failure_dt: float = 0.01
    quiet_steps: int = 10
    max_halvings: int = 10
    failure_resolve_dt: float = math.inf  # refine dt before applying drops

    def __post_init__(self):
        if self.tol_p <= 0.0 or self.tol_u <= 0.0:
            raise ValueError("outer tolerances must be positive")
        if self.scheme not in ("fixed_stress", "monolithic"):
            raise ValueError(f"unknown scheme {self.scheme!r}")


@dataclass
class CellFailureConfig:
    """Per-cell Coulomb parameters in array form."""

    tan_friction: np.ndarray
    cohesion: np.ndarray
    stress_drop: np.ndarray
    tensile_cutoff: np.ndarray
    check_enabled: np.ndarray          # bool: participate in shear checks
    fault_angle_rad: np.ndarray        # nan -> critical-plane mode


@dataclass
class CoupledProblem:
    """Everything a coupled run needs besides the evolving state."""

    flow: FlowProblem
    fem: PlaneStrainFEM
    biot: np.ndarray
    k_bulk: np.ndarray
    phi0: np.ndarray
    rho_solid: np.ndarray
    failure: CellFailureConfig
    faults: list[tuple[FaultDescriptor, list[FaultCell]]] = field(default_factory=list)
    out_of_plane_depth: float = 100.0
    settings: SplitSettings = field(default_factory=SplitSettings)
    fss_coeff: float = 1.0

    @property
    def grid(self):
        return self.flow.grid

    def mixture_density(self, p_w, s_n, phi):
        s_w, _, p_n, rho_w, rho_n, _, _, _ = self.flow.secondary(p_w, s_n)
        return phi * (s_w * rho_w + s_n * rho_n) + (1.0 - phi) * self.rho_solid


@dataclass
class CoupledState:
    phase: PhaseState
    mech: MechState
    phi: np.ndarray
    p_eff: np.ndarray
    p_eff_init: np.ndarray
    rho_ref: np.ndarray
    t: float = 0.0
    dt: float = 1e3
    events: list[SeismicEvent] = field(default_factory=list)
    injection_active: bool = True
    quiet_steps: int = 0

    def copy(self) -> "CoupledState":
        return CoupledState(
            phase=self.phase.copy(), mech=self.mech.copy(), phi=self.phi.copy(),
            p_eff=self.p_eff.copy(), p_eff_init=self.p_eff_init,
            rho_ref=self.rho_ref.copy(), t=self.t, dt=self.dt,
            events=list(self.events), injection_active=self.injection_active,
            quiet_steps=self.quiet_steps,
        )


@dataclass
class StepResult:
    phase: PhaseState
    du: np.ndarray
    dsigma: np.ndarray
    dsigma_zz: np.ndarray
    eps_v: np.ndarray
    phi: np.ndarray
    p_eff: np.ndarray
    outer_iters: int


def _dp_terzaghi(problem: CoupledProblem, state: CoupledState, eps_v, p_eff):
    return -problem.k_bulk * eps_v + (problem.biot - 1.0) * (p_eff - state.p_eff_init)


def solve_step_fixed_stress(problem: CoupledProblem, state: CoupledState,
                            dt: float, drops: np.ndarray | None = None,
                            extra_mech_rhs: np.ndarray | None = None) -> StepResult:
    """One implicit step of the sequential scheme, iterated to convergence.

    The outer fixed point on the effective pressure is Anderson-mixed over
    a short residual history: boundary-constrained domains make the plain
    stabilized iteration arbitrarily slow (a fully confined mean-pressure
    mode contracts like a^2 M/(a^2 M + K) -> 1), and the mixing removes the
    few slow modes.
    """
    st = problem.settings
    flow = problem.flow
    fem = problem.fem
    mass_w, mass_n = flow.phase_mass(state.phase.p_w, state.phase.s_n,
                                     state.phi, 1.0 + state.mech.eps_v)
    p_eff_k = state.p_eff.copy()
    phase_k = state.phase
    b2k = problem.biot**2 / problem.k_bulk
    zeros_dirichlet = np.zeros(fem.n_eq)
    def mech_update(p_eff_ref, phase_ref):
        rho_now = problem.mixture_density(phase_ref.p_w, phase_ref.s_n,
                                          state.phi)
        rhs = fem.load_pressure(problem.biot * (p_eff_ref - state.mech.p_eff_ref))
        rhs += fem.load_body(rho_now - state.rho_ref, _gravity_of(problem))
        if drops is not None:
            rhs += fem.load_eigenstress(drops)
        if extra_mech_rhs is not None:
            rhs += extra_mech_rhs
        du = fem.solve(rhs, zeros_dirichlet)
        _, _, deps_v = fem.cell_stress_increment(du)
        epsv = state.mech.eps_v + deps_v
        dp_t = _dp_terzaghi(problem, state, epsv, p_eff_ref)
        phi = effective_porosity(problem.phi0, problem.k_bulk, problem.biot,
                                 dp_t)
        return du, epsv, phi

    du = du_prev = None
    hist_x, hist_f = [], []
    depth = 4
    for outer in range(1, st.max_outer + 1):
        du, epsv_k, phi_k = mech_update(p_eff_k, phase_k)
        phase_k, _ = flow.newton_solve(
            phase_k, mass_w, mass_n, dt, phi_k, 1.0 + epsv_k,
            fss_coeff=problem.fss_coeff, biot2_over_k=b2k, p_eff_outer=p_eff_k)
        _, _, _, _, _, _, _, p_eff_flow = flow.secondary(phase_k.p_w, phase_k.s_n)

        resid = p_eff_flow - p_eff_k
        dp_outer = np.max(np.abs(resid))
        du_outer = math.inf if du_prev is None else np.max(np.abs(du - du_prev))
        du_prev = du
        if dp_outer < st.tol_p and du_outer < st.tol_u:
            break
        # Anderson mixing over a short residual history
        hist_x.append(p_eff_k.copy())
        hist_f.append(resid.copy())
        if len(hist_x) > depth + 1:
            hist_x.pop(0)
            hist_f.pop(0)
        if len(hist_x) >= 2:
            df = np.column_stack([hist_f[i + 1] - hist_f[i]
                                  for i in range(len(hist_f) - 1)])
            dx = np.column_stack([hist_x[i + 1] - hist_x[i]
                                  for i in range(len(hist_x) - 1)])
            gamma, *_ = np.linalg.lstsq(df, resid, rcond=1e-12)
            p_eff_k = p_eff_k + resid - (dx + df) @ gamma
        else:
            p_eff_k = p_eff_k + resid
    else:
        raise FlowNonConvergence(
            f"fixed-stress outer loop did not converge in {st.max_outer} "
            f"iterations (dp={dp_outer:.3e} Pa, du={du_outer:.3e} m)")

    du, epsv_k, phi_k = mech_update(p_eff_k, phase_k)
    dsig, dsig_zz, deps_v = fem.cell_stress_increment(du, drops)
    return StepResult(phase=phase_k, du=du, dsigma=dsig, dsigma_zz=dsig_zz,
                      eps_v=state.mech.eps_v + deps_v, phi=phi_k,
                      p_eff=p_eff_k, outer_iters=outer)


def _gravity_of(problem: CoupledProblem) -> float:
    return problem.flow.gravity


def solve_step_monolithic(problem: CoupledProblem, state: CoupledState,
                          dt: float, drops: np.ndarray | None = None,
                          extra_mech_rhs: np.ndarray | None = None,
                          max_iter: int = 15) -> StepResult:
    """Fully coupled Newton on the combined flow/mechanics residual.

    The converged equations are identical to the fixed-stress limit: the
    accumulation porosity follows the mean-stress law evaluated at the
    current strain and pressure, and no stabilization term is present.
    The mechanics rows are linear and assembled exactly; the flow rows use
    the colored finite difference blocks (cells for p/S, vertices for u).
    """
    flow = problem.flow
    fem = problem.fem
    grid = problem.grid
    n = grid.n_cells
    mass_w, mass_n = flow.phase_mass(state.phase.p_w, state.phase.s_n,
                                     state.phi, 1.0 + state.mech.eps_v)
    n_free = len(fem.free_idx)

    def expand_du(du_free):
        x = np.zeros(fem.n_eq)
        x[fem.free_idx] = du_free
        return x[fem.eqmap].reshape(-1, 2)

    def fields_of(p, s, du_free):
        du = expand_du(du_free)
        eps = fem.cell_strain_increment(du)
        deps_v = eps[:, 0] + eps[:, 1]
        epsv_new = state.mech.eps_v + deps_v
        p_eff = flow.secondary(p, s)[7]
        dp_t = _dp_terzaghi(problem, state, epsv_new, p_eff)
        phi = effective_porosity(problem.phi0, problem.k_bulk, problem.biot, dp_t)
        return du, epsv_new, p_eff, phi

    def mech_rhs(p, s, p_eff):
        rho_now = problem.mixture_density(p, s, state.phi)
        rhs = fem.load_pressure(problem.biot * (p_eff - state.mech.p_eff_ref))
        rhs += fem.load_body(rho_now - state.rho_ref, _gravity_of(problem))
        if drops is not None:
            rhs += fem.load_eigenstress(drops)
        if extra_mech_rhs is not None:
            rhs += extra_mech_rhs
        return rhs

    def residual(z):
        p, s, du_free = z[:n], z[n:2 * n], z[2 * n:]
        du, epsv_new, p_eff, phi = fields_of(p, s, du_free)
        r_flow = flow.residual(p, s, mass_w, mass_n, dt, phi, 1.0 + epsv_new)
        r_mech = fem.k_ff @ du_free - mech_rhs(p, s, p_eff)[fem.free_idx]
        return np.concatenate([r_flow, r_mech])

    flow_groups = _monolithic_flow_groups(problem)
    pcol_template = _pressure_load_columns(problem)

    z = np.concatenate([state.phase.p_w, state.phase.s_n,
                        np.zeros(n_free)])
    scale_flow = flow._residual_scale(state.phi, dt)
    kdiag = np.abs(fem.k_ff.diagonal())
    scale_rows = np.concatenate([scale_flow, np.maximum(kdiag, 1.0) * 1e-6])

    def jacobian(z, r0):
        m = 2 * n + n_free
        rows_all, cols_all, vals_all = [], [], []
        for cols, rows, owner_col in flow_groups:
            eps = np.where(cols < n, 1e-7 * (np.abs(z[cols]) + 1e4),
                           np.where(cols < 2 * n, 1e-7, 1e-9))
            zp = z.copy()
            zp[cols] += eps
            dr = residual(zp)[:2 * n] - r0[:2 * n]
            eps_of_col = np.zeros(m)
            eps_of_col[cols] = eps
            rows_all.append(rows)
            cols_all.append(owner_col)
            vals_all.append(dr[rows] / eps_of_col[owner_col])

        # mech rows: exact stiffness block and local pressure/density columns
        kff = fem.k_ff.tocoo()
        rows_all.append(2 * n + kff.row)
        cols_all.append(2 * n + kff.col)
        vals_all.append(kff.data)

        p, s = z[:n], z[n:2 * n]
        p_eff = flow.secondary(p, s)[7]
        for var in (0, 1):
            x = p if var == 0 else s
            eps = 1e-7 * (np.abs(x) + (1e4 if var == 0 else 1.0))
            xp = x.copy() + eps
            pe2 = flow.secondary(xp, s)[7] if var == 0 \
                else flow.secondary(p, xp)[7]
            rho1 = problem.mixture_density(p, s, state.phi)
            rho2 = problem.mixture_density(xp if var == 0 else p,
                                           s if var == 0 else xp, state.phi)
            dpe = (pe2 - p_eff) / eps
            drho = (rho2 - rho1) / eps
            cell_rows, cell_cols, base_vals, body_vals = pcol_template
            vals = -(base_vals * dpe[cell_cols]
                     + body_vals * drho[cell_cols] * _gravity_of(problem))
            rows_all.append(cell_rows)
            cols_all.append(var * n + cell_cols)
            vals_all.append(vals)

        rows = np.concatenate(rows_all)
        cols = np.concatenate(cols_all)
        vals = np.concatenate(vals_all)
        keep = vals != 0.0
        return csc_matrix((vals[keep], (rows[keep], cols[keep])), shape=(m, m))

    norm0 = None
    for it in range(max_iter):
        r = residual(z)
        norm = np.max(np.abs(r / scale_rows))
        if norm0 is None:
            norm0 = max(norm, 1e-300)
        if norm < 1e-8 or norm < 1e-10 * norm0:
            break
        jac = jacobian(z, r)
        dz = splu(jac).solve(-r)
        ds = dz[n:2 * n]
        mstep = np.max(np.abs(ds)) if len(ds) else 0.0
        if mstep > 0.25:
            dz *= 0.25 / mstep
        z = z + dz
        z[n:2 * n] = np.clip(z[n:2 * n], 0.0, 1.0)
    else:
        raise FlowNonConvergence("monolithic Newton did not converge")

    p, s, du_free = z[:n], z[n:2 * n], z[2 * n:]
    du, epsv_new, p_eff, phi = fields_of(p, s, du_free)
    dsig, dsig_zz, deps_v = fem.cell_stress_increment(du, drops)
    return StepResult(phase=PhaseState(p, s), du=du, dsigma=dsig,
                      dsigma_zz=dsig_zz, eps_v=state.mech.eps_v + deps_v,
                      phi=phi, p_eff=p_eff, outer_iters=it + 1)


def _pressure_load_columns(problem: CoupledProblem):
    """Sparse template of the mech-row columns of one cell's pressure.

    For cell e the pressure load contributes biot_e * (Bint rows) to the
    free equations of its vertices, and the weight change contributes the
    consistent body-force entries. Returns (rows, cells, p_eff_weight,
    body_weight) aligned arrays in the combined-system row indexing.
    """
    fem = problem.fem
    grid = problem.grid
    n = grid.n_cells
    free_of_eq = -np.ones(fem.n_eq, int)
    free_of_eq[fem.free_idx] = np.arange(len(fem.free_idx))
    bsum = problem.biot[:, None] * (fem.b_int[:, 0, :] + fem.b_int[:, 1, :])
    rows, cells, pvals, bvals = [], [], [], []
    for e in range(n):
        eqs = fem.eqmap[fem.cell_dofs[e]]
        fe = free_of_eq[eqs]
        for k in range(8):
            if fe[k] < 0:
                continue
            rows.append(2 * n + fe[k])
            cells.append(e)
            pvals.append(bsum[e, k])
            # body force acts on vertical dofs only
            bvals.append(-grid.vol[e] / 4.0 if k % 2 == 1 else 0.0)
    return (np.asarray(rows, int), np.asarray(cells, int),
            np.asarray(pvals, float), np.asarray(bvals, float))


def _monolithic_flow_groups(problem: CoupledProblem):
    """Colored perturbation groups for the FLOW rows of the combined system.

    Cell variables use the distance-2 stencil coloring; vertex variables a
    2x2 block pattern (two vertices conflict on a flow row only when they
    share an adjacent cell). Shared (plate-tied) equations get singleton
    groups covering all flow rows.
    """
    grid = problem.grid
    fem = problem.fem
    n = grid.n_cells
    free_of_eq = -np.ones(fem.n_eq, int)
    free_of_eq[fem.free_idx] = np.arange(len(fem.free_idx))
    eq_counts = np.bincount(fem.eqmap, minlength=fem.n_eq)

    ix, iy = grid.cell_ij(np.arange(n))
    cell_color = (ix + 2 * iy) % 5
    groups = []
    for var in (0, 1):
        for col_idx in range(5):
            cells = np.flatnonzero(cell_color == col_idx)
            rows, owner = [], []
            for j in cells:
                local = []
                for mcell in _cell_stencil(grid, j):
                    local.extend((2 * mcell, 2 * mcell + 1))
                rows.extend(local)
                owner.extend([var * n + j] * len(local))
            groups.append((var * n + cells,
                           np.asarray(rows, int), np.asarray(owner, int)))

    vx = np.arange(grid.n_verts) % (grid.nx + 1)
    vy = np.arange(grid.n_verts) // (grid.nx + 1)
    vert_color = (vx % 2) + 2 * (vy % 2)
    shared = set()
    for comp in (0, 1):
        for col_idx in range(4):
            cols, rows, owner = [], [], []
            for v in np.flatnonzero(vert_color == col_idx):
                eq = fem.eqmap[2 * v + comp]
                fe = free_of_eq[eq]
                if fe < 0:
                    continue
                if eq_counts[eq] > 1:
                    shared.add(int(fe))
                    continue
                col = 2 * n + fe
                local = []
                for c in _cells_of_vertex(grid, int(v)):
                    local.extend((2 * c, 2 * c + 1))
                cols.append(col)
                rows.extend(local)
                owner.extend([col] * len(local))
            if cols:
                groups.append((np.asarray(cols, int),
                               np.asarray(rows, int), np.asarray(owner, int)))
    all_flow_rows = np.arange(2 * n)
    for fe in sorted(shared):
        col = 2 * n + fe
        groups.append((np.asarray([col]), all_flow_rows,
                       np.full(2 * n, col, int)))
    return groups


def _cell_stencil(grid, c):
    ix, iy = grid.cell_ij(c)
    out = [c]
    if ix > 0:
        out.append(c - 1)
    if ix < grid.nx - 1:
        out.append(c + 1)
    if iy > 0:
        out.append(c - grid.nx)
    if iy < grid.ny - 1:
        out.append(c + grid.nx)
    return out


def _cells_of_vertex(grid, v):
    jx = v % (grid.nx + 1)
    jy = v // (grid.nx + 1)
    out = []
    for cx in (jx - 1, jx):
        for cy in (jy - 1, jy):
            if 0 <= cx < grid.nx and 0 <= cy < grid.ny:
                out.append(cy * grid.nx + cx)
    return out


def solve_step(problem: CoupledProblem, state: CoupledState, dt: float,
               drops=None, extra_mech_rhs=None) -> StepResult:
    if problem.settings.scheme == "monolithic":
        return solve_step_monolithic(problem, state, dt, drops, extra_mech_rhs)
    return solve_step_fixed_stress(problem, state, dt, drops, extra_mech_rhs)


def accept_step(problem: CoupledProblem, state: CoupledState,
                result: StepResult, dt: float) -> CoupledState:
    mech = MechState(
        u=state.mech.u + result.du,
        sigma=state.mech.sigma + result.dsigma,
        sigma_zz=state.mech.sigma_zz + result.dsigma_zz,
        eps_v=result.eps_v,
        p_eff_ref=result.p_eff.copy(),
    )
    new = state.copy()
    new.phase = result.phase
    new.mech = mech
    new.phi = result.phi
    new.p_eff = result.p_eff
    new.rho_ref = problem.mixture_density(result.phase.p_w, result.phase.s_n,
                                          result.phi)
    new.t = state.t + dt
    return new


def total_stress(problem: CoupledProblem, sigma_skel, p_eff):
    """(sxx, syy, sxy) total stress triples from skeleton stress and pressure."""
    ap = problem.biot * p_eff
    return (sigma_skel[:, 0] - ap, sigma_skel[:, 1] - ap, sigma_skel[:, 2])


def failed_cells(problem: CoupledProblem, sigma_skel, p_eff) -> list[tuple[int, float]]:
    """Monitored cells violating Coulomb: list of (cell, plane angle)."""
    txx, tyy, txy = total_stress(problem, sigma_skel, p_eff)
    cfg = problem.failure
    out = []
    for c in np.flatnonzero(cfg.check_enabled):
        ang = cfg.fault_angle_rad[c]
        params = FailureParams(
            tan_friction=cfg.tan_friction[c], cohesion=cfg.cohesion[c],
            stress_drop=cfg.stress_drop[c],
            fault_angle_deg=None if math.isnan(ang) else math.degrees(ang))
        chk = check_shear_failure(txx[c], tyy[c], txy[c], p_eff[c],
                                  problem.biot[c], params)
        if chk.failed:
            out.append((int(c), chk.angle_rad))
    return out


def build_drops(problem: CoupledProblem, sigma_skel, p_eff,
                failures: list[tuple[int, float]]) -> np.ndarray:
    """Cellwise eigenstress corrections that remove the prescribed shear drop."""
    txx, tyy, txy = total_stress(problem, sigma_skel, p_eff)
    drops = np.zeros((problem.grid.n_cells, 3))
    for c, angle in failures:
        drops[c] = stress_drop_correction(
            txx[c], tyy[c], txy[c], angle, problem.failure.stress_drop[c])
    return drops


def cell_safety_margins(problem: CoupledProblem, sigma_skel, p_eff,
                        cells) -> np.ndarray:
    txx, tyy, txy = total_stress(problem, sigma_skel, p_eff)
    cfg = problem.failure
    out = np.empty(len(cells))
    for i, c in enumerate(cells):
        ang = cfg.fault_angle_rad[c]
        params = FailureParams(
            tan_friction=cfg.tan_friction[c], cohesion=cfg.cohesion[c],
            stress_drop=cfg.stress_drop[c],
            fault_angle_deg=None if math.isnan(ang) else math.degrees(ang))
        out[i] = safety_margin(txx[c], tyy[c], txy[c], p_eff[c],
                               problem.biot[c], params)
    return out


@dataclass
class WorkflowResult:
    state: CoupledState
    events: list[SeismicEvent]
    episode_events: list[SeismicEvent]
    step_log: list[dict]


def porosity_law_residual(problem: CoupledProblem, state: CoupledState) -> float:
    """Max relative residual of K(phi - phi0) + (alpha - phi) dp_T = 0."""
    dp_t = _dp_terzaghi(problem, state, state.mech.eps_v, state.p_eff)
    lhs = problem.k_bulk * (state.phi - problem.phi0) \
        + (problem.biot - state.phi) * dp_t
    scale = np.maximum(problem.k_bulk * np.maximum(problem.phi0, 1e-6), 1.0)
    return float(np.max(np.abs(lhs) / scale))


def run_transient(problem: CoupledProblem, state: CoupledState, t_end: float,
                  on_step=None, injection_sources=None,
                  stop_on_reactivation: bool = True) -> WorkflowResult:
    """Advance to t_end with the trial / stress-drop pattern.

    ``injection_sources`` is the (q_w, q_n) pair active while injection is
    on; when an event fires the sources are zeroed for the rest of the run.
    ``on_step`` is called with (state, result, events_this_step) after each
    accepted step.
    """
    st = problem.settings
    events: list[SeismicEvent] = []
    episodes: list[SeismicEvent] = []
    step_log: list[dict] = []
    slip_accum: dict[str, np.ndarray] = {
        f.name: np.zeros(len(cells)) for f, cells in problem.faults}
    episode_onset: dict[str, float] = {}
    episode_open = False

    def set_injection(active: bool):
        if injection_sources is None:
            return
        q_w, q_n = injection_sources
        if active:
            problem.flow.sources.q_w = q_w
            problem.flow.sources.q_n = q_n
        else:
            problem.flow.sources.q_w = np.zeros_like(q_w)
            problem.flow.sources.q_n = np.zeros_like(q_n)

    set_injection(state.injection_active)

    while state.t < t_end - 1e-9:
        dt = min(state.dt, t_end - state.t)
        halvings = 0
        while True:
            try:
                trial = solve_step(problem, state, dt)
                break
            except FlowNonConvergence as exc:
                halvings += 1
                if halvings > st.max_halvings:
                    raise CouplingError(
                        f"step at t={state.t:.6g}s failed after "
                        f"{st.max_halvings} halvings") from exc
                dt *= 0.5
                logger.info("retrying step at t=%.6g with dt=%.6g", state.t, dt)

        sigma_trial = state.mech.sigma + trial.dsigma
        failures = failed_cells(problem, sigma_trial, trial.p_eff)

        if failures and dt > st.failure_resolve_dt:
            state = replace_dt(state, max(dt / 4.0, st.failure_resolve_dt))
            logger.info("failure detected at t=%.6g; refining dt to %.6g",
                        state.t, state.dt)
            continue

        step_events: list[SeismicEvent] = []
        if failures:
            drops = build_drops(problem, sigma_trial, trial.p_eff, failures)
            dropped = solve_step(problem, state, dt, drops=drops)
            failed_set = {c for c, _ in failures}
            for fault, cells in problem.faults:
                in_fault = [i for i, fc in enumerate(cells)
                            if fc.cell in failed_set]
                if not in_fault:
                    continue
                slips = compute_slip(trial.du, dropped.du, fault, cells)
                mask = np.zeros(len(cells), bool)
                mask[in_fault] = True
                slips = np.where(mask, slips, 0.0)
                g_slip = float(np.mean([problem.fem.g[fc.cell]
                                        for i, fc in enumerate(cells) if mask[i]]))
                ev = seismic_event(state.t + dt, fault, cells, slips,
                                   problem.out_of_plane_depth, g_slip)
                if ev is not None:
                    step_events.append(ev)
                    episode_onset.setdefault(fault.name, state.t + dt)
                    slip_accum[fault.name] += slips
            result = dropped
            episode_open = True
        else:
            result = trial

        state = accept_step(problem, state, result, dt)
        state.events.extend(step_events)
        events.extend(step_events)

        if step_events:
            state.quiet_steps = 0
            state.dt = st.failure_dt
            if stop_on_reactivation and state.injection_active:
                state.injection_active = False
                set_injection(False)
                logger.info("fault reactivation at t=%.6g s; injection stopped",
                            state.t)
        else:
            state.quiet_steps += 1
            if episode_open and state.quiet_steps >= st.quiet_steps:
                episode_open = False
                for fault, cells in problem.faults:
                    acc = slip_accum[fault.name]
                    if not np.any(acc > 0.0):
                        continue
                    g_slip = float(np.mean(
                        [problem.fem.g[fc.cell] for i, fc in enumerate(cells)
                         if acc[i] > 0.0]))
                    ev = seismic_event(episode_onset.pop(fault.name, state.t),
                                       fault, cells, acc,
                                       problem.out_of_plane_depth, g_slip)
                    if ev is not None:
                        episodes.append(ev)
                    slip_accum[fault.name] = np.zeros(len(cells))
            if state.quiet_steps >= st.quiet_steps or not episode_open:
                state.dt = min(state.dt * st.growth, st.dt_max)

        if on_step is not None:
            on_step(state, result, step_events)
        step_log.append({
            "t": state.t, "dt": dt, "outer": result.outer_iters,
            "events": len(step_events),
        })

    # close any open episode at the horizon
    if episode_open:
        for fault, cells in problem.faults:
            acc = slip_accum[fault.name]
            if np.any(acc > 0.0):
                g_slip = float(np.mean(
                    [problem.fem.g[fc.cell] for i, fc in enumerate(cells)
                     if acc[i] > 0.0]))
                ev = seismic_event(episode_onset.pop(fault.name, state.t),
                                   fault, cells, acc,
                                   problem.out_of_plane_depth, g_slip)
                if ev is not None:
                    episodes.append(ev)

    return WorkflowResult(state=state, events=events, episode_events=episodes,
                          step_log=step_log)


def replace_dt(state: CoupledState, dt: float) -> CoupledState:
    new = state.copy()
    new.dt = dt
    return new


# ---------------------------------------------------------------------------
# checkpointing
# ---------------------------------------------------------------------------

CHECKPOINT_VERSION = 1


def save_checkpoint(path, state: CoupledState, fmt: str = "npz"):
    """Serialize the coupled state (json or npz)."""
    arrays = {
        "p_w": state.phase.p_w, "s_n": state.phase.s_n,
        "u": state.mech.u, "sigma": state.mech.sigma,
        "sigma_zz": state.mech.sigma_zz, "eps_v": state.mech.eps_v,
        "p_eff_ref": state.mech.p_eff_ref, "phi": state.phi,
        "p_eff": state.p_eff, "p_eff_init": state.p_eff_init,
        "rho_ref": state.rho_ref,
    }
    scalars = {
        "version": CHECKPOINT_VERSION, "t": state.t, "dt": state.dt,
        "injection_active": state.injection_active,
        "quiet_steps": state.quiet_steps,
    }
    if fmt == "npz":
        np.savez(path, __meta__=json.dumps(scalars), **arrays)
    elif fmt == "json":
        doc = dict(scalars)
        doc["arrays"] = {k: np.asarray(v).tolist() for k, v in arrays.items()}
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(doc, fh)
    else:
        raise ValueError(f"unknown checkpoint format {fmt!r}")


def load_checkpoint(path, fmt: str = "npz") -> CoupledState:
    if fmt == "npz":
        with np.load(path, allow_pickle=False) as data:
            meta = json.loads(str(data["__meta__"]))
            arrays = {k: data[k] for k in data.files if k != "__meta__"}
    elif fmt == "json":
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
        meta = {k: v for k, v in doc.items() if k != "arrays"}
        arrays = {k: np.asarray(v) for k, v in doc["arrays"].items()}
    else:
        raise ValueError(f"unknown checkpoint format {fmt!r}")
    if meta["version"] != CHECKPOINT_VERSION:
        raise CouplingError(f"checkpoint version {meta['version']} unsupported")
    state = CoupledState(
        phase=PhaseState(arrays["p_w"], arrays["s_n"]),
        mech=MechState(arrays["u"], arrays["sigma"], arrays["sigma_zz"],
                       arrays["eps_v"], arrays["p_eff_ref"]),
        phi=arrays["phi"], p_eff=arrays["p_eff"],
        p_eff_init=arrays["p_eff_init"], rho_ref=arrays["rho_ref"],
        t=float(meta["t"]), dt=float(meta["dt"]),
        injection_active=bool(meta["injection_active"]),
        quiet_steps=int(meta["quiet_steps"]),
    )
    return state
