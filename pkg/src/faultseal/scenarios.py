"""Packaged scenarios: the column compression sweep and the two-fault
field showcase with optional mineralization of the left fault.

Zone materials bundle hydraulic, mechanical and strength parameters; fault
zones carry cementation parameters so a treatment level (reduced porosity)
can be propagated consistently: permeability through the anchored power
law, retention through the scaling factors, stiffness through the
cementation model, and the Biot coefficient from the updated frame modulus.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .constitutive import GasModel, RetentionParams, WaterModel, rescale_retention
from .coupling import (CellFailureConfig, CoupledProblem, CoupledState,
                       SplitSettings, cell_safety_margins, run_transient)
from .flow import DirichletFaces, FlowProblem, PhaseState, RetentionFields, SourceSpec
from .mechanics import AxisymmetricFEM, MechBCs, MechState, PlaneStrainFEM
from .mesh import FaultDescriptor, GridSpec, StructuredGrid, build_grid, fault_cells, graded_axis
from .rockphysics import (AnchoredPowerLaw, CementModelParams, biot_from_moduli,
                          constant_cement_moduli, permeability)

logger = logging.getLogger(__name__)


class ScenarioError(ValueError):
    pass


@dataclass(frozen=True)
class ZoneMaterial:
    """Hydraulic, mechanical and strength parameters of one zone."""

    name: str
    porosity: float
    permeability: float
    retention: RetentionParams
    k_bulk: float
    g_shear: float
    biot: float
    rho_solid: float = 2650.0
    tan_friction: float = 0.6
    cohesion: float = 0.0
    stress_drop: float = 1e6
    tensile_cutoff: float = 0.0
    check_shear: bool = False
    cement: CementModelParams | None = None


def material_from_cement(name: str, porosity: float, perm: float,
                         retention: RetentionParams,
                         cement: CementModelParams, **kw) -> ZoneMaterial:
    """Zone whose stiffness and Biot coefficient follow the cement model."""
    m = constant_cement_moduli(cement, porosity)
    alpha = biot_from_moduli(m.k, cement.k_grain)
    return ZoneMaterial(name=name, porosity=porosity, permeability=perm,
                        retention=retention, k_bulk=m.k, g_shear=m.g,
                        biot=alpha, cement=cement, **kw)


def apply_treatment(mat: ZoneMaterial, phi_new: float,
                    perm_exponent: float = 3.0,
                    phi_floor: float = 0.01) -> ZoneMaterial:
    """Material bundle after mineralization reduces porosity to phi_new.

    Permeability follows the power law anchored at the untreated state,
    retention parameters are rescaled by the treatment factors, stiffness is
    re-evaluated from the cementation model and the Biot coefficient from
    the stiffened frame. Identity when the porosity is unchanged.
    """
    if phi_new == mat.porosity:
        return mat
    if phi_new < phi_floor:
        raise ScenarioError(f"treated porosity {phi_new} below floor {phi_floor}")
    if mat.cement is None:
        raise ScenarioError(f"zone {mat.name!r} has no cementation parameters")
    if phi_new > mat.cement.phi_c:
        raise ScenarioError("treated porosity above critical porosity")
    law = AnchoredPowerLaw(k_ref=mat.permeability, phi_ref=mat.porosity,
                           exponent=perm_exponent)
    k_new = permeability(law, phi_new)
    ret_new = rescale_retention(mat.retention, phi_new, mat.porosity)
    m = constant_cement_moduli(mat.cement, phi_new)
    alpha = biot_from_moduli(m.k, mat.cement.k_grain)
    out = replace(mat, porosity=phi_new, permeability=k_new,
                  retention=ret_new, k_bulk=m.k, g_shear=m.g, biot=alpha)
    if not (out.k_bulk > mat.k_bulk and out.g_shear > mat.g_shear):
        raise ScenarioError("treatment must stiffen the zone")
    if not out.permeability < mat.permeability:
        raise ScenarioError("treatment must reduce permeability")
    return out


# ---------------------------------------------------------------------------
# column compression test
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class UcsSpec:
    """Axisymmetric column test: geometry, loading, cementation."""

    radius: float = 0.025
    height: float = 0.1
    nr: int = 6
    nz: int = 24
    porosity: float = 0.43
    porosity_profile: tuple[float, float] | None = (0.39, 0.43)  # (bottom, top)
    strain_rate: float = 4.5e-4          # 1/s
    end_strain: float = 4.5e-3
    n_record: int = 10
    k_grain: float = 38e9
    g_grain: float = 44e9
    k_cement: float = 63e9
    g_cement: float = 31e9
    phi_c: float = 0.44
    phi_b: float = 0.42
    n_coord: float = 0.62

    def cement_params(self) -> CementModelParams:
        return CementModelParams(k_grain=self.k_grain, g_grain=self.g_grain,
                                 k_cement=self.k_cement, g_cement=self.g_cement,
                                 phi_c=self.phi_c, phi_b=self.phi_b,
                                 n_coord=self.n_coord)


@dataclass
class UcsResult:
    spec: UcsSpec
    strains: np.ndarray
    stresses: np.ndarray   # top-face average axial stress (tension-positive)
    e50: float


def run_ucs(spec: UcsSpec) -> UcsResult:
    """Drive the axisymmetric column and extract the secant modulus.

    The loading surface moves down at the prescribed strain rate; the
    reported stress is the annulus-area-weighted average axial stress in the
    top cell row. E50 is the secant modulus at half the final load.
    """
    grid = build_grid(GridSpec(
        x_coords=np.linspace(0.0, spec.radius, spec.nr + 1),
        y_coords=np.linspace(0.0, spec.height, spec.nz + 1)))
    if spec.porosity_profile is not None:
        lo, hi = spec.porosity_profile
        phi = lo + (hi - lo) * grid.cy / spec.height
    else:
        phi = np.full(grid.n_cells, spec.porosity)
    if np.any(phi > spec.phi_c + 1e-12):
        raise ScenarioError("column porosity above critical porosity")

    cem = spec.cement_params()
    e_mod = np.empty(grid.n_cells)
    nu = np.empty(grid.n_cells)
    for i, p in enumerate(phi):
        m = constant_cement_moduli(cem, p)
        e_mod[i] = m.e
        nu[i] = m.nu

    dirichlet = {}
    for v in grid.boundary_vertices("left"):
        dirichlet[2 * int(v)] = 0.0
    for v in grid.boundary_vertices("bottom"):
        dirichlet[2 * int(v) + 1] = 0.0
    uz_end = -spec.end_strain * spec.height
    for v in grid.boundary_vertices("top"):
        dirichlet[2 * int(v) + 1] = uz_end
    fem = AxisymmetricFEM(grid, e_mod, nu, dirichlet)

    top = grid.boundary_cells("top")
    w = grid.cx[top] * grid.dx[top]
    strains = np.linspace(0.0, spec.end_strain, spec.n_record + 1)
    stresses = np.empty_like(strains)
    for i, eps in enumerate(strains):
        u = fem.solve(eps / spec.end_strain)
        sig = fem.cell_stress(u)
        stresses[i] = float((sig[top, 1] * w).sum() / w.sum())

    peak = stresses[-1]
    half = 0.5 * peak
    # linear elastic response: interpolate the strain at half load
    eps_half = np.interp(abs(half), np.abs(stresses), strains)
    e50 = abs(half) / eps_half
    return UcsResult(spec=spec, strains=strains, stresses=stresses, e50=float(e50))


def ucs_sweep(spec: UcsSpec, phi_b_values) -> dict[float, float]:
    """E50 for each well-sorted porosity in the sweep."""
    out = {}
    for pb in phi_b_values:
        out[float(pb)] = run_ucs(replace(spec, phi_b=float(pb))).e50
    return out


# ---------------------------------------------------------------------------
# two-fault field showcase
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ShowcaseSpec:
    """Geometry, materials and operating parameters of the field scenario.

    Cases: "a" untreated; "b" moderate sealing (fault porosity 0.15 -> 0.07);
    "c" intensive sealing (0.15 -> 0.05). Treatment applies to the upper
    interval of the left fault only.
    """

    case: str = "a"
    extent: float = 2000.0
    depth_top: float = 500.0
    # layer elevations measured from the domain bottom
    interfaces: tuple[float, ...] = (750.0, 900.0, 1000.0, 1150.0)
    layer_names: tuple[str, ...] = ("basal_aquifer", "lower_seal", "reservoir",
                                    "caprock", "upper_aquifer")
    fault_x: tuple[float, float] = (500.0, 1500.0)
    fault_dip: float = 80.0
    fault_width: float = 10.0
    # vertical offset of the outer block relative to the central block;
    # both offsets lower the outer blocks so the storage layer is juxtaposed
    # against the seals across each fault (confined reservoir)
    fault_throws: tuple[float, float] = (-50.0, -50.0)
    treated_interval: tuple[float, float] = (900.0, 2000.0)
    treatment_porosity: dict = field(default_factory=dict)  # case -> phi
    injection_interval: tuple[float, float] = (850.0, 950.0)
    injection_rate: float = 4e-4          # kg/(m^2 s)
    horizon_days: float = 100.0
    out_of_plane_depth: float = 100.0
    dx_fault: float = 10.0
    dx_coarse: float = 40.0
    dy: float = 25.0
    gravity: float = 9.81
    pressure_datum: float = 101325.0       # water pressure at ground surface
    overburden_density: float = 2500.0
    lateral_stress_ratio: float = 0.52     # total-stress ratio of the init
    # strengths per fault: the permeable left fault is a cohesive sand-like
    # damage zone, the tight right fault a weaker clay-gouge zone
    fault_tan_friction: tuple[float, float] = (0.6, 0.45)
    fault_cohesion: tuple[float, float] = (3.45e6, 1.382e6)
    stress_drop: float = 1.0e6
    matrix_failure: bool = False
    top_drainage: bool = True
    # lateral mechanical boundary: "traction" keeps the initial horizontal
    # stress profile on the sides (domain may expand), "roller" pins them
    side_bc: str = "traction"

    def __post_init__(self):
        if self.case not in ("a", "b", "c"):
            raise ScenarioError(f"unknown case {self.case!r}")

    @property
    def treated_phi(self) -> float | None:
        default = {"a": None, "b": 0.07, "c": 0.05}
        return self.treatment_porosity.get(self.case, default[self.case])


def default_zone_materials() -> dict[str, ZoneMaterial]:
    """Material table of the showcase (moduli interpreted as GPa)."""
    res_ret = RetentionParams(vg_alpha=5.025e-4, vg_n=1.842)
    cap_ret = RetentionParams(vg_alpha=5.025e-5, vg_n=1.842)
    cement_table = dict(k_grain=38e9, g_grain=44e9, k_cement=98e9,
                        g_cement=35e9, n_coord=9.0)
    mats = {
        "caprock": ZoneMaterial(
            name="caprock", porosity=0.01, permeability=1e-19,
            retention=cap_ret, k_bulk=34.4e9, g_shear=18.7e9, biot=0.242),
        "lower_seal": ZoneMaterial(
            name="lower_seal", porosity=0.01, permeability=1e-19,
            retention=cap_ret, k_bulk=34.4e9, g_shear=18.7e9, biot=0.242),
        "reservoir": ZoneMaterial(
            name="reservoir", porosity=0.1, permeability=1e-13,
            retention=res_ret, k_bulk=6.0e9, g_shear=8.0e9, biot=0.778),
        "upper_aquifer": ZoneMaterial(
            name="upper_aquifer", porosity=0.1, permeability=1e-14,
            retention=res_ret, k_bulk=6.0e9, g_shear=8.0e9, biot=0.778),
        "basal_aquifer": ZoneMaterial(
            name="basal_aquifer", porosity=0.01, permeability=1.9e-16,
            retention=res_ret, k_bulk=6.0e9, g_shear=8.0e9, biot=0.778),
        "fault_right": material_from_cement(
            "fault_right", porosity=0.1, perm=1e-15, retention=res_ret,
            cement=CementModelParams(phi_c=0.105, phi_b=0.07, **cement_table)),
        "fault_left": material_from_cement(
            "fault_left", porosity=0.15, perm=1.9e-13, retention=res_ret,
            cement=CementModelParams(phi_c=0.155, phi_b=0.12, **cement_table)),
    }
    return mats


@dataclass
class ShowcaseProblem:
    spec: ShowcaseSpec
    problem: CoupledProblem
    grid: StructuredGrid
    material_id: np.ndarray
    materials: list[ZoneMaterial]
    faults: list[FaultDescriptor]
    injection: tuple[np.ndarray, np.ndarray]   # (q_w, q_n)
    p_hydrostatic: np.ndarray
    state0: CoupledState


def hydrostatic_pressure(grid: StructuredGrid, water: WaterModel,
                         gravity: float, p_top: float) -> np.ndarray:
    """Columnwise discrete hydrostatic field (zero initial flow residual)."""
    p = np.empty(grid.n_cells)
    ny, nx = grid.ny, grid.nx
    for ixc in range(nx):
        top_cell = (ny - 1) * nx + ixc
        depth_half = 0.5 * grid.dy[top_cell]
        pi = p_top + 1000.0 * gravity * depth_half
        for _ in range(3):
            rho = 0.5 * (water.density(p_top) + water.density(pi))
            pi = p_top + rho * gravity * depth_half
        p[top_cell] = pi
        for iyc in range(ny - 2, -1, -1):
            cid = iyc * nx + ixc
            above = cid + nx
            dz = grid.cy[above] - grid.cy[cid]
            pj = p[above]
            pi = pj + 1000.0 * gravity * dz
            for _ in range(3):
                rho = 0.5 * (water.density(pi) + water.density(pj))
                pi = pj + rho * gravity * dz
            p[cid] = pi
    return p


def build_showcase(spec: ShowcaseSpec,
                   settings: SplitSettings | None = None) -> ShowcaseProblem:
    mats = default_zone_materials()
    layer_ids = {name: i for i, name in enumerate(spec.layer_names)}
    left_id = len(spec.layer_names)
    right_id = left_id + 1

    left = FaultDescriptor(
        name="fault_left", zone=left_id, x_ref=spec.fault_x[0],
        y_ref=0.5 * (spec.interfaces[1] + spec.interfaces[2]),
        dip_deg=spec.fault_dip, width=spec.fault_width,
        throw=spec.fault_throws[0], shift_side="west",
        treated=spec.treated_phi is not None,
        treated_interval=spec.treated_interval if spec.treated_phi else None)
    right = FaultDescriptor(
        name="fault_right", zone=right_id, x_ref=spec.fault_x[1],
        y_ref=0.5 * (spec.interfaces[1] + spec.interfaces[2]),
        dip_deg=spec.fault_dip, width=spec.fault_width,
        throw=spec.fault_throws[1], shift_side="east")

    span = spec.extent / math.tan(math.radians(spec.fault_dip)) / 2.0 \
        + 3.0 * spec.fault_width
    xs = []
    for fx in spec.fault_x:
        xs.extend([fx - span, fx + span])
    segs = []
    prev = 0.0
    fine = False
    for xcut in xs + [spec.extent]:
        segs.append((prev, xcut, spec.dx_fault if fine else spec.dx_coarse))
        prev = xcut
        fine = not fine
    x_coords = graded_axis(segs)
    y_coords = graded_axis([(0.0, spec.extent, spec.dy)])

    grid = build_grid(GridSpec(
        x_coords=x_coords, y_coords=y_coords,
        layer_zones=tuple(layer_ids[n] for n in spec.layer_names),
        layer_interfaces=spec.interfaces, faults=(left, right)))

    materials = [mats[n] for n in spec.layer_names] + [mats["fault_left"],
                                                       mats["fault_right"]]
    for pos, idx in enumerate((left_id, right_id)):
        materials[idx] = replace(
            materials[idx], check_shear=True,
            tan_friction=spec.fault_tan_friction[pos],
            cohesion=spec.fault_cohesion[pos], stress_drop=spec.stress_drop)

    material_id = grid.cell_zone.copy()
    if spec.treated_phi is not None:
        treated_mat = apply_treatment(materials[left_id], spec.treated_phi)
        treated_mat = replace(treated_mat, name="fault_left_treated")
        treated_id = len(materials)
        materials.append(treated_mat)
        lo, hi = spec.treated_interval
        sel = (material_id == left_id) & (grid.cy >= lo) & (grid.cy <= hi)
        material_id[sel] = treated_id
        logger.info("treated %d left-fault cells to porosity %.3f "
                    "(K=%.2f GPa, k=%.2e m^2)", sel.sum(), spec.treated_phi,
                    treated_mat.k_bulk / 1e9, treated_mat.permeability)

    def scatter(attr):
        vals = np.array([getattr(m, attr) for m in materials])
        return vals[material_id]

    perm = scatter("permeability")
    phi0 = scatter("porosity")
    biot = scatter("biot")
    k_bulk = scatter("k_bulk")
    g_shear = scatter("g_shear")
    rho_s = scatter("rho_solid")
    lam = k_bulk - 2.0 * g_shear / 3.0

    retention = RetentionFields(
        vg_alpha=np.array([m.retention.vg_alpha for m in materials])[material_id],
        vg_n=np.array([m.retention.vg_n for m in materials])[material_id],
        s_wr=np.array([m.retention.s_wr for m in materials])[material_id],
        s_nr=np.array([m.retention.s_nr for m in materials])[material_id],
        se_reg=np.array([m.retention.se_reg for m in materials])[material_id])

    water = WaterModel()
    gas = GasModel()

    p_top = spec.pressure_datum + 1000.0 * spec.gravity * spec.depth_top
    p_hydro = hydrostatic_pressure(grid, water, spec.gravity, p_top)

    # hydrostatic drainage boundaries: right side always, top optionally
    right_cells = grid.boundary_cells("right")
    b_cells = [right_cells]
    b_trans = [grid.dy[right_cells] * perm[right_cells]
               / (0.5 * grid.dx[right_cells])]
    b_p = [p_hydro[right_cells].copy()]
    b_dz = [np.zeros(len(right_cells))]
    if spec.top_drainage:
        top_cells = grid.boundary_cells("top")
        b_cells.append(top_cells)
        b_trans.append(grid.dx[top_cells] * perm[top_cells]
                       / (0.5 * grid.dy[top_cells]))
        b_p.append(np.full(len(top_cells), p_top))
        b_dz.append(0.5 * grid.dy[top_cells])
    dirichlet = DirichletFaces(
        cells=np.concatenate(b_cells),
        trans=np.concatenate(b_trans),
        p_w=np.concatenate(b_p),
        s_n=np.zeros(sum(len(c) for c in b_cells)),
        dz=np.concatenate(b_dz))

    q_w = np.zeros(grid.n_cells)
    q_n = np.zeros(grid.n_cells)
    lo, hi = spec.injection_interval
    left_cells = grid.boundary_cells("left")
    sel = (grid.cy[left_cells] >= lo) & (grid.cy[left_cells] <= hi)
    inj_cells = left_cells[sel]
    if len(inj_cells) == 0:
        raise ScenarioError("injection interval selects no boundary cells")
    q_n[inj_cells] = spec.injection_rate * grid.dy[inj_cells]

    flow = FlowProblem(grid=grid, perm=perm, retention=retention,
                       water=water, gas=gas, gravity=spec.gravity,
                       dirichlet=dirichlet,
                       sources=SourceSpec(q_w=q_w.copy(), q_n=q_n.copy()))

    bcs = MechBCs()
    if spec.side_bc == "roller":
        for side in ("left", "right"):
            for v in grid.boundary_vertices(side):
                bcs.dirichlet[2 * int(v)] = 0.0
    elif spec.side_bc != "traction":
        raise ScenarioError(f"unknown side_bc {spec.side_bc!r}")
    for v in grid.boundary_vertices("bottom"):
        bcs.dirichlet[2 * int(v)] = 0.0
        bcs.dirichlet[2 * int(v) + 1] = 0.0
    overburden = spec.overburden_density * spec.gravity * spec.depth_top
    bcs.tractions.append(("top", 0.0, -overburden))
    fem = PlaneStrainFEM(grid, lam, g_shear, bcs)

    fail = CellFailureConfig(
        tan_friction=scatter("tan_friction"),
        cohesion=scatter("cohesion"),
        stress_drop=scatter("stress_drop"),
        tensile_cutoff=scatter("tensile_cutoff"),
        check_enabled=np.array([m.check_shear for m in materials])[material_id]
        if not spec.matrix_failure
        else np.ones(grid.n_cells, bool),
        fault_angle_rad=np.full(grid.n_cells, np.nan))
    for f in (left, right):
        fail.fault_angle_rad[grid.cell_zone == f.zone] = f.dip_rad

    if settings is None:
        settings = SplitSettings(
            scheme="fixed_stress", max_outer=60, tol_p=100.0, tol_u=1e-8,
            dt_init=4e3, dt_max=2 * 86400.0, growth=1.3,
            failure_dt=0.01, quiet_steps=10,
            failure_resolve_dt=0.05 * 86400.0)

    problem = CoupledProblem(
        flow=flow, fem=fem, biot=biot, k_bulk=k_bulk, phi0=phi0,
        rho_solid=rho_s,
        failure=fail,
        faults=[(left, fault_cells(grid, left)), (right, fault_cells(grid, right))],
        out_of_plane_depth=spec.out_of_plane_depth,
        settings=settings)

    state0 = initialize_showcase_state(problem, spec, p_hydro)
    return ShowcaseProblem(spec=spec, problem=problem, grid=grid,
                           material_id=material_id, materials=materials,
                           faults=[left, right], injection=(q_w, q_n),
                           p_hydrostatic=p_hydro, state0=state0)


def initialize_showcase_state(problem: CoupledProblem, spec: ShowcaseSpec,
                              p_hydro: np.ndarray) -> CoupledState:
    """In-situ state with a prescribed effective lateral stress ratio.

    The vertical total stress comes from the discrete lithostatic integral
    (overburden traction plus mixture weight), the horizontal effective
    stress is lateral_stress_ratio times the vertical effective stress, and
    shear is zero. One elastic correction solve then brings the prescribed
    field into exact discrete equilibrium (material jumps, notably the Biot
    contrast across fault bands, perturb the analytic balance), and the
    tension cutoff is applied. Displacements restart at zero from the
    equilibrated state; all later steps are increments on top of it.
    """
    grid = problem.grid
    fem = problem.fem
    n = grid.n_cells
    phase = PhaseState(p_w=p_hydro.copy(), s_n=np.zeros(n))
    rho = problem.mixture_density(phase.p_w, phase.s_n, problem.phi0)

    sigma_v = np.empty(n)
    overburden = spec.overburden_density * spec.gravity * spec.depth_top
    nx, ny = grid.nx, grid.ny
    for ixc in range(nx):
        acc = -overburden
        for iyc in range(ny - 1, -1, -1):
            cid = iyc * nx + ixc
            acc -= rho[cid] * spec.gravity * 0.5 * grid.dy[cid]
            sigma_v[cid] = acc
            acc -= rho[cid] * spec.gravity * 0.5 * grid.dy[cid]

    alpha_p = problem.biot * p_hydro
    # ratio prescribed on TOTAL stresses: the total field is what must be
    # in equilibrium, and it stays continuous across Biot contrasts
    sh_total = spec.lateral_stress_ratio * sigma_v
    sv_eff = sigma_v + alpha_p
    sh_eff = sh_total + alpha_p
    sigma = np.column_stack([sh_eff, sv_eff, np.zeros(n)])

    # equilibrate: K du = f_ext - f_int(prescribed stress)
    rhs = fem.load_pressure(alpha_p) + fem.load_body(rho, spec.gravity) \
        + fem.load_tractions() + fem.load_eigenstress(sigma)
    if spec.side_bc == "traction":
        # side tractions hold the initial lateral stress profile; their
        # increments are zero, so they only enter this equilibration
        for side, sign in (("left", -1.0), ("right", 1.0)):
            cells = grid.boundary_cells(side)
            verts = grid.boundary_vertices(side)
            for i, cid in enumerate(cells):
                t_x = sign * sh_total[cid]
                for v in (verts[i], verts[i + 1]):
                    rhs[fem.eqmap[2 * int(v)]] += 0.5 * grid.dy[cid] * t_x
    du = fem.solve(rhs, np.zeros(fem.n_eq))
    dsig, dsig_zz, _ = fem.cell_stress_increment(du)
    sigma = sigma + dsig
    sigma_zz = sh_eff + dsig_zz

    # tension cutoff on the equilibrated effective stress field
    from .failure import tension_cutoff
    cut = problem.failure.tensile_cutoff
    corr = np.zeros_like(sigma)
    for _ in range(50):
        mean = 0.5 * (sigma[:, 0] + sigma[:, 1])
        radius = np.hypot(0.5 * (sigma[:, 0] - sigma[:, 1]), sigma[:, 2])
        if np.max(mean + radius - cut) <= max(1e-4 * np.abs(sigma).max(), 1.0):
            break
        cxx, cyy, cxy = tension_cutoff(sigma[:, 0], sigma[:, 1], sigma[:, 2], cut)
        corr += 1.8 * (np.column_stack([cxx, cyy, cxy]) - sigma)
        du = fem.solve(rhs + fem.load_eigenstress(corr), np.zeros(fem.n_eq))
        dsig, dsig_zz, _ = fem.cell_stress_increment(du)
        sigma = np.column_stack([sh_eff, sv_eff, np.zeros(n)]) + dsig + corr
        sigma_zz = sh_eff + dsig_zz
    else:
        logger.warning("initial tension cutoff did not fully settle")

    mech = MechState(u=np.zeros((grid.n_verts, 2)), sigma=sigma,
                     sigma_zz=sigma_zz, eps_v=np.zeros(n),
                     p_eff_ref=p_hydro.copy())
    return CoupledState(phase=phase, mech=mech, phi=problem.phi0.copy(),
                        p_eff=p_hydro.copy(), p_eff_init=p_hydro.copy(),
                        rho_ref=rho, dt=problem.settings.dt_init)


@dataclass
class ShowcaseResult:
    spec: ShowcaseSpec
    workflow: object
    failure_time_days: float | None
    failure_fault: str | None
    failure_cells: tuple[int, ...]
    magnitudes: list[float]
    margins: dict
    probes: list


def run_showcase(sp: ShowcaseProblem, on_step=None) -> ShowcaseResult:
    spec = sp.spec
    horizon = spec.horizon_days * 86400.0
    wf = run_transient(sp.problem, sp.state0, horizon, on_step=on_step,
                       injection_sources=(sp.injection[0], sp.injection[1]))
    first = wf.events[0] if wf.events else None
    episodes = wf.episode_events
    margins = {}
    if first is not None:
        cells = list(first.cells)
        margins["final"] = cell_safety_margins(
            sp.problem, wf.state.mech.sigma, wf.state.p_eff, cells).tolist()
    return ShowcaseResult(
        spec=spec, workflow=wf,
        failure_time_days=(first.time / 86400.0) if first else None,
        failure_fault=first.fault if first else None,
        failure_cells=first.cells if first else (),
        magnitudes=[e.magnitude for e in episodes],
        margins=margins, probes=[])
