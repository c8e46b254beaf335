"""End-to-end verification runs against the analytic reference solutions.

Two problems are wired here:

* the rigid-plate drained sample on a quarter domain (pressure compared on
  the horizontal centerline at a set of dimensionless times, including the
  early non-monotonic rise), and
* the pressure-step injection into a laterally constrained column with
  fixed ends.

Both drive the production coupled solver (fixed-stress by default,
monolithic optionally) with single-phase water; the references come from
:mod:`faultseal.oracles` and share no code with the solvers.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .constitutive import GasModel, WaterModel
from .coupling import (CoupledProblem, CoupledState, CellFailureConfig,
                       SplitSettings, accept_step, solve_step)
from .flow import DirichletFaces, FlowProblem, PhaseState, RetentionFields
from .mechanics import MechBCs, MechState, PlaneStrainFEM
from .mesh import GridSpec, build_grid, graded_axis
from .oracles import (Injection1dParams, MandelSpec, injection1d_analytic,
                      linear_coeffs, mandel_pressure)


@dataclass
class VerificationReport:
    name: str
    times: list
    errors: list
    tolerance: float
    extras: dict = field(default_factory=dict)
    rows: list = field(default_factory=list)  # (x, t, analytic, numeric)

    @property
    def passed(self) -> bool:
        return bool(np.all(np.asarray(self.errors) <= self.tolerance))

    def summary(self) -> str:
        worst = float(np.max(self.errors))
        status = "PASS" if self.passed else "FAIL"
        return (f"{self.name}: {status} (worst relative L2 "
                f"{worst:.3%} vs tolerance {self.tolerance:.1%})")


def _passive_retention(n: int) -> RetentionFields:
    # single-phase water runs never sample the two-phase curves away from
    # full saturation; any admissible parameter set works here
    return RetentionFields(vg_alpha=np.full(n, 5e-4), vg_n=np.full(n, 2.0),
                           s_wr=np.full(n, 0.0), s_nr=np.full(n, 0.0),
                           se_reg=np.full(n, 0.01))


def _no_failure_checks(n: int) -> CellFailureConfig:
    return CellFailureConfig(
        tan_friction=np.full(n, 0.6), cohesion=np.zeros(n),
        stress_drop=np.full(n, 1e6), tensile_cutoff=np.zeros(n),
        check_enabled=np.zeros(n, bool), fault_angle_rad=np.full(n, np.nan))


def _step_schedule(t_targets, t_start_frac=1e-5, growth=1.35,
                   dt_max_frac=0.007):
    """Geometric steps hitting every target time exactly.

    ``dt_max_frac`` caps the step at a fraction of the horizon so the
    backward Euler error stays small relative to the slowest decay mode.
    """
    t_end = max(t_targets)
    ts = []
    t = 0.0
    dt = t_start_frac * t_end
    dt_max = dt_max_frac * t_end
    targets = sorted(t_targets)
    for tt in targets:
        while t < tt - 1e-12 * t_end:
            step = min(dt, tt - t)
            t += step
            ts.append(t)
            dt = min(dt * growth, dt_max)
    return np.asarray(ts)


def build_mandel_problem(nx=40, ny=40, a=100.0, b=10.0, force=6e8,
                         lam=1.65e9, g_shear=2.475e9, perm=9.869e-14,
                         porosity=0.4, specific_storage=6.0606e-11,
                         viscosity=1e-3, scheme="fixed_stress",
                         tol_p=None):
    """Quarter-domain plate problem wired for the coupled solver."""
    grid = build_grid(GridSpec(x_coords=np.linspace(0.0, a, nx + 1),
                               y_coords=np.linspace(0.0, b, ny + 1)))
    n = grid.n_cells
    beta = specific_storage / porosity
    water = WaterModel(rho0=1000.0, compressibility=beta, p_ref=0.0,
                       mu=viscosity)

    right = grid.boundary_cells("right")
    dirichlet = DirichletFaces(
        cells=right,
        trans=grid.dy[right] * perm / (0.5 * grid.dx[right]),
        p_w=np.zeros(len(right)), s_n=np.zeros(len(right)),
        dz=np.zeros(len(right)))

    flow = FlowProblem(grid=grid, perm=np.full(n, perm),
                       retention=_passive_retention(n), water=water,
                       gas=GasModel(), gravity=0.0, dirichlet=dirichlet)

    bcs = MechBCs()
    for v in grid.boundary_vertices("left"):
        bcs.dirichlet[2 * int(v)] = 0.0
    for v in grid.boundary_vertices("bottom"):
        bcs.dirichlet[2 * int(v) + 1] = 0.0
    bcs.tied_uy_side = "top"
    bcs.tied_force = -force

    lam_f = np.full(n, lam)
    g_f = np.full(n, g_shear)
    fem = PlaneStrainFEM(grid, lam_f, g_f, bcs)

    k_bulk = lam + 2.0 * g_shear / 3.0
    settings = SplitSettings(
        scheme=scheme, max_outer=60,
        tol_p=(force / a) * 1e-5 if tol_p is None else tol_p,
        tol_u=1e-11 * b)
    problem = CoupledProblem(
        flow=flow, fem=fem, biot=np.ones(n), k_bulk=np.full(n, k_bulk),
        phi0=np.full(n, porosity), rho_solid=np.full(n, 2650.0),
        failure=_no_failure_checks(n), faults=[], settings=settings)

    coeffs = linear_coeffs(k_bulk=k_bulk, g_shear=g_shear, biot_alpha=1.0,
                           porosity=porosity, fluid_bulk=1.0 / beta,
                           perm=perm, viscosity=viscosity)
    spec = MandelSpec(a=a, b=b, force=force, coeffs=coeffs, g_shear=g_shear,
                      n_terms=300)
    return problem, spec


def initial_state(problem: CoupledProblem, p0=None, dt0=1.0) -> CoupledState:
    n = problem.grid.n_cells
    p = np.zeros(n) if p0 is None else np.asarray(p0, float).copy()
    phase = PhaseState(p_w=p, s_n=np.zeros(n))
    mech = MechState(u=np.zeros((problem.grid.n_verts, 2)),
                     sigma=np.zeros((n, 3)), sigma_zz=np.zeros(n),
                     eps_v=np.zeros(n), p_eff_ref=p.copy())
    rho = problem.mixture_density(p, phase.s_n, problem.phi0)
    return CoupledState(phase=phase, mech=mech, phi=problem.phi0.copy(),
                        p_eff=p.copy(), p_eff_init=p.copy(), rho_ref=rho,
                        dt=dt0)


def run_mandel(problem: CoupledProblem, spec: MandelSpec, taus=None,
               collect=None) -> VerificationReport:
    """March the coupled solver through the plate problem.

    ``taus`` are dimensionless comparison times (c_v t / a^2). Errors are
    relative L2 norms of the centerline pressure against the series.
    """
    if taus is None:
        taus = [1e-3, 3e-3, 1e-2, 3e-2, 6e-2, 1e-1, 3e-1, 1.0]
    grid = problem.grid
    c_v = spec.coeffs.consolidation
    t_char = spec.a**2 / c_v
    t_targets = [tau * t_char for tau in taus]
    schedule = _step_schedule(t_targets)

    state = initial_state(problem)
    plate_load = problem.fem.load_tractions()

    # centerline: bottom row of cells (pressure is y-uniform)
    row = grid.boundary_cells("bottom")
    xs = grid.cx[row]

    errors, rows = [], []
    peak_ratio = 0.0
    p00 = None
    t_prev = 0.0
    pending = {round(t, 9): tau for t, tau in zip(t_targets, taus)}
    first = True
    for t_now in schedule:
        dt = t_now - t_prev
        extra = plate_load if first else None
        result = solve_step(problem, state, dt, extra_mech_rhs=extra)
        state = accept_step(problem, state, result, dt)
        first = False
        t_prev = t_now
        center_p = float(state.phase.p_w[row[0]])
        if p00 is None:
            p00 = center_p
        peak_ratio = max(peak_ratio, center_p / p00)
        key = round(t_now, 9)
        if key in pending:
            p_ana = mandel_pressure(xs, t_now, spec)
            p_num = state.phase.p_w[row]
            err = float(np.linalg.norm(p_num - p_ana)
                        / np.linalg.norm(p_ana))
            errors.append(err)
            for x, pa, pn in zip(xs, p_ana, p_num):
                rows.append((float(x), float(t_now), float(pa), float(pn)))
            if collect is not None:
                collect(t_now, xs, p_ana, p_num)
            del pending[key]

    return VerificationReport(
        name="mandel", times=t_targets, errors=errors, tolerance=0.02,
        extras={"peak_ratio": peak_ratio, "t_char": t_char,
                "undrained_p": p00}, rows=rows)


def run_scheme_equivalence(nx=20, ny=20, taus=(1e-3, 1e-2, 6e-2, 3e-1)) -> VerificationReport:
    """Fixed-stress and monolithic plate-problem pressures must agree.

    Both schemes discretize the same converged equations, so the relative
    L-infinity difference is bounded by the outer/Newton tolerances.
    """
    snaps = {}
    t_targets = None
    for scheme in ("fixed_stress", "monolithic"):
        problem, spec = build_mandel_problem(nx=nx, ny=ny, scheme=scheme)
        t_char = spec.a**2 / spec.coeffs.consolidation
        t_targets = [tau * t_char for tau in taus]
        schedule = _step_schedule(t_targets, dt_max_frac=0.01)
        state = initial_state(problem)
        plate = problem.fem.load_tractions()
        out = {}
        t_prev = 0.0
        first = True
        for t_now in schedule:
            dt = t_now - t_prev
            result = solve_step(problem, state, dt,
                                extra_mech_rhs=plate if first else None)
            state = accept_step(problem, state, result, dt)
            first = False
            t_prev = t_now
            for tt in t_targets:
                if abs(t_now - tt) < 1e-9 * tt:
                    out[tt] = state.phase.p_w.copy()
        snaps[scheme] = out
    errors = []
    for tt in t_targets:
        a = snaps["fixed_stress"][tt]
        b = snaps["monolithic"][tt]
        errors.append(float(np.max(np.abs(a - b)) / np.max(np.abs(a))))
    return VerificationReport(name="scheme_equivalence", times=t_targets,
                              errors=errors, tolerance=1e-3)


def build_injection1d_problem(n_fine=60, n_coarse=90, length=10.0,
                              p_step=1e4, scheme="fixed_stress"):
    """Constrained-column pressure-step problem (benchmark material)."""
    params = Injection1dParams(length=length, perm=1e-10, viscosity=1e-3,
                               porosity=0.4, fluid_compressibility=5e-10,
                               biot_alpha=1.0, g_shear=8e6, lam=12e6)
    fine_end = 0.12 * length
    x = graded_axis([(0.0, fine_end, fine_end / n_fine),
                     (fine_end, length, (length - fine_end) / n_coarse)])
    grid = build_grid(GridSpec(x_coords=x, y_coords=np.linspace(0, 1.0, 2)))
    n = grid.n_cells

    water = WaterModel(rho0=1000.0, compressibility=params.fluid_compressibility,
                       p_ref=0.0, mu=params.viscosity)
    left = grid.boundary_cells("left")
    dirichlet = DirichletFaces(
        cells=left,
        trans=grid.dy[left] * params.perm / (0.5 * grid.dx[left]),
        p_w=np.full(len(left), p_step), s_n=np.zeros(len(left)),
        dz=np.zeros(len(left)))
    flow = FlowProblem(grid=grid, perm=np.full(n, params.perm),
                       retention=_passive_retention(n), water=water,
                       gas=GasModel(), gravity=0.0, dirichlet=dirichlet)

    bcs = MechBCs()
    for side in ("top", "bottom"):
        for v in grid.boundary_vertices(side):
            bcs.dirichlet[2 * int(v) + 1] = 0.0
    for side in ("left", "right"):
        for v in grid.boundary_vertices(side):
            bcs.dirichlet[2 * int(v)] = 0.0
    fem = PlaneStrainFEM(grid, np.full(n, params.lam),
                         np.full(n, params.g_shear), bcs)

    k_bulk = params.lam + 2.0 * params.g_shear / 3.0
    settings = SplitSettings(scheme=scheme, max_outer=80,
                             tol_p=p_step * 1e-6, tol_u=1e-13 * length)
    problem = CoupledProblem(
        flow=flow, fem=fem, biot=np.ones(n), k_bulk=np.full(n, k_bulk),
        phi0=np.full(n, params.porosity), rho_solid=np.full(n, 2650.0),
        failure=_no_failure_checks(n), faults=[], settings=settings)
    return problem, params, p_step


def run_injection1d(problem: CoupledProblem, params: Injection1dParams,
                    p_step: float, taus=(5e-3, 5e-2, 5e-1),
                    collect=None) -> VerificationReport:
    grid = problem.grid
    t_targets = [tau * params.t_char for tau in taus]
    schedule = _step_schedule(t_targets, t_start_frac=2e-6, growth=1.25)
    state = initial_state(problem)
    xs = grid.cx
    errors, rows = [], []
    pending = {round(t, 12): tau for t, tau in zip(t_targets, taus)}
    t_prev = 0.0
    for t_now in schedule:
        dt = t_now - t_prev
        result = solve_step(problem, state, dt)
        state = accept_step(problem, state, result, dt)
        t_prev = t_now
        key = round(t_now, 12)
        if key in pending:
            p_ana = injection1d_analytic(xs, t_now, params)
            p_num = state.phase.p_w / p_step
            err = float(np.linalg.norm(p_num - p_ana)
                        / np.linalg.norm(p_ana))
            errors.append(err)
            for x, pa, pn in zip(xs, p_ana, p_num):
                rows.append((float(x), float(t_now), float(pa), float(pn)))
            if collect is not None:
                collect(t_now, xs, p_ana, p_num)
            del pending[key]
    return VerificationReport(name="injection1d", times=t_targets,
                              errors=errors, tolerance=0.02, rows=rows)
