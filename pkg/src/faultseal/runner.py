"""Runs a validated configuration and writes the output file set.

A run directory contains: ``timeseries.csv`` (probe traces), ``events.csv``
(one row per failed cell per event), ``summary.json``, numbered VTK
snapshots, the effective config used, and checkpoint files.
"""

from __future__ import annotations

import logging
from pathlib import Path

import numpy as np

from .config import RunConfig, write_config
from .coupling import cell_safety_margins, porosity_law_residual, save_checkpoint
from .io import (CsvWriter, EVENTS_HEADER, TIMESERIES_HEADER, write_summary,
                 write_vtk)
from .scenarios import ShowcaseSpec, build_showcase, run_showcase

logger = logging.getLogger(__name__)


def _probe_cells(grid, points):
    out = []
    for x, y in points:
        d2 = (grid.cx - x) ** 2 + (grid.cy - y) ** 2
        out.append(int(np.argmin(d2)))
    return out


def showcase_spec_from_config(cfg: RunConfig) -> ShowcaseSpec:
    sim = cfg.section("simulation")
    g = cfg.section("grid")
    f = cfg.section("faults")
    inj = cfg.section("injection")
    ini = cfg.section("initial_stress")
    bc = cfg.section("bc")
    treatment = {}
    if f["treatment_porosity"] is not None:
        treatment[sim["case"]] = f["treatment_porosity"]
    return ShowcaseSpec(
        case=sim["case"],
        horizon_days=sim["horizon_days"],
        out_of_plane_depth=sim["out_of_plane_depth_m"],
        extent=g["extent_m"], depth_top=g["depth_top_m"],
        dx_fault=g["dx_fault_m"], dx_coarse=g["dx_coarse_m"], dy=g["dy_m"],
        fault_x=tuple(f["x_positions_m"]),
        fault_dip=f["dip_deg"], fault_width=f["width_m"],
        fault_throws=tuple(f["throws_m"]),
        treated_interval=tuple(f["treated_interval_m"]),
        treatment_porosity=treatment,
        injection_interval=tuple(inj["interval_m"]),
        injection_rate=inj["rate_kg_m2_s"],
        lateral_stress_ratio=ini["lateral_stress_ratio"],
        overburden_density=ini["overburden_density_kg_m3"],
        pressure_datum=ini["surface_pressure_pa"],
        fault_tan_friction=tuple(f["tan_friction"]),
        fault_cohesion=tuple(f["cohesion_pa"]),
        stress_drop=f["stress_drop_pa"],
        side_bc=bc["mech_sides"],
        top_drainage=bc["top_drainage"],
    )


def run_from_config(cfg: RunConfig, config_path=None) -> Path:
    if cfg.kind != "showcase":
        raise ValueError(f"run_from_config handles 'showcase', got {cfg.kind!r}")
    sim = cfg.section("simulation")
    out_cfg = cfg.section("output")
    ts = cfg.section("timestepping")

    out_dir = Path(out_cfg["directory"] or f"runs/{sim['name']}")
    out_dir.mkdir(parents=True, exist_ok=True)
    write_config(out_dir / "config_used.toml", cfg)

    from .coupling import SplitSettings
    settings = SplitSettings(
        scheme="fixed_stress", max_outer=ts["max_outer"],
        tol_p=ts["tol_p_pa"], tol_u=ts["tol_u_m"], dt_init=ts["dt_init_s"],
        dt_max=ts["dt_max_s"], growth=ts["growth"],
        failure_dt=ts["failure_dt_s"], quiet_steps=ts["quiet_steps"],
        failure_resolve_dt=ts["failure_resolve_dt_s"])

    spec = showcase_spec_from_config(cfg)
    sp = build_showcase(spec, settings=settings)
    return run_showcase_to_dir(sp, out_dir,
                               probe_points=out_cfg["probe_points_m"],
                               snapshot_every=out_cfg["snapshot_every_steps"],
                               checkpoint_format=out_cfg["checkpoint_format"])


def run_showcase_to_dir(sp, out_dir: Path, probe_points=None,
                        snapshot_every: int = 25,
                        checkpoint_format: str = "npz") -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    grid = sp.grid
    problem = sp.problem
    probes = _probe_cells(grid, probe_points or [[250.0, 975.0]])

    ts_writer = CsvWriter(out_dir / "timeseries.csv", TIMESERIES_HEADER)
    ev_writer = CsvWriter(out_dir / "events.csv", EVENTS_HEADER)
    margins_writer = CsvWriter(out_dir / "fault_margins.csv",
                               ["t_s", "fault", "cell", "y_m", "margin_pa"])
    slip_writer = CsvWriter(out_dir / "slip_profiles.csv",
                            ["t_s", "fault", "cell", "y_m", "slip_m"])
    profile_writer = CsvWriter(out_dir / "profiles.csv",
                               ["t_s", "x_m", "p_w", "s_n"])
    # reservoir mid-height row for the along-layer pressure profile
    y_mid = 0.5 * (sp.spec.interfaces[1] + sp.spec.interfaces[2])
    row_iy = int(np.argmin(np.abs(0.5 * (grid.y[:-1] + grid.y[1:]) - y_mid)))
    profile_cells = grid.cell_id(np.arange(grid.nx), row_iy)
    state_holder = {"n": 0}

    def on_step(state, result, events):
        rows = []
        margins = cell_safety_margins(problem, state.mech.sigma, state.p_eff,
                                      probes)
        s_w, p_c, p_n = problem.flow.secondary(state.phase.p_w,
                                               state.phase.s_n)[:3]
        for i, c in enumerate(probes):
            rows.append((state.t, i, float(state.phase.p_w[c]),
                         float(state.phase.p_w[c] + p_c[c]),
                         float(state.phase.s_n[c]),
                         float(state.mech.sigma[c, 0]),
                         float(state.mech.sigma[c, 1]),
                         float(state.mech.sigma[c, 2]),
                         float(state.phi[c]), float(margins[i])))
        ts_writer.append(rows)

        for ev in events:
            cells = list(ev.cells)
            m = cell_safety_margins(problem, state.mech.sigma, state.p_eff,
                                    cells)
            from .coupling import total_stress
            from .failure import plane_stresses
            txx, tyy, txy = total_stress(problem, state.mech.sigma,
                                         state.p_eff)
            ev_rows = []
            for cell, margin in zip(cells, m):
                ang = problem.failure.fault_angle_rad[cell]
                sn, tau = plane_stresses(txx[cell], tyy[cell], txy[cell], ang)
                sn_eff = -sn - problem.biot[cell] * state.p_eff[cell]
                ev_rows.append((ev.time, sp.spec.case, cell,
                                int(grid.cell_zone[cell]), float(tau),
                                float(sn_eff), float(margin), ev.slip,
                                ev.area, ev.moment, ev.magnitude))
            ev_writer.append(ev_rows)

        if events or state_holder["n"] % 5 == 0:
            mrows = []
            for fault, cells in problem.faults:
                ids = [fc.cell for fc in cells]
                fm = cell_safety_margins(problem, state.mech.sigma,
                                         state.p_eff, ids)
                mrows.extend((state.t, fault.name, cid,
                              float(grid.cy[cid]), float(v))
                             for cid, v in zip(ids, fm))
            margins_writer.append(mrows)

        if state_holder["n"] % 5 == 0 or events:
            profile_writer.append(
                [(state.t, float(grid.cx[c]), float(state.phase.p_w[c]),
                  float(state.phase.s_n[c])) for c in profile_cells])

        if state_holder["n"] % snapshot_every == 0 or events:
            idx = state_holder["n"]
            # principal values of the total (pressure-reduced) stress
            from .coupling import total_stress as _tot
            txx, tyy, txy = _tot(problem, state.mech.sigma, state.p_eff)
            mean = 0.5 * (txx + tyy)
            radius = np.hypot(0.5 * (txx - tyy), txy)
            write_vtk(out_dir / f"snapshot_{idx:05d}.vtk", grid,
                      cell_data={
                          "p_w": state.phase.p_w, "s_n": state.phase.s_n,
                          "phi": state.phi, "zone": grid.cell_zone,
                          "sigma_xx": state.mech.sigma[:, 0],
                          "sigma_yy": state.mech.sigma[:, 1],
                          "sigma_xy": state.mech.sigma[:, 2],
                          "sigma_eff_1": mean + radius,
                          "sigma_eff_3": mean - radius,
                      },
                      point_data={"u": state.mech.u})
        state_holder["n"] += 1

    result = run_showcase(sp, on_step=on_step)
    wf = result.workflow

    # slip profiles per fault from the accumulated episodes
    for ev in wf.episode_events:
        cells = next(c for f, c in problem.faults if f.name == ev.fault)
        per_cell = dict(zip(ev.cells, ev.cell_slips))
        rows = [(ev.time, ev.fault, fc.cell, float(grid.cy[fc.cell]),
                 float(per_cell.get(fc.cell, 0.0)))
                for fc in cells]
        slip_writer.append(rows)

    final = wf.state
    field_writer = CsvWriter(out_dir / "field_final.csv",
                             ["x_m", "y_m", "zone", "p_w", "s_n", "phi",
                              "sigma_xx", "sigma_yy", "sigma_xy",
                              "dsigma_xy"])
    dsig_xy = final.mech.sigma[:, 2] - sp.state0.mech.sigma[:, 2]
    field_writer.append([
        (float(grid.cx[i]), float(grid.cy[i]), int(grid.cell_zone[i]),
         float(final.phase.p_w[i]), float(final.phase.s_n[i]),
         float(final.phi[i]), float(final.mech.sigma[i, 0]),
         float(final.mech.sigma[i, 1]), float(final.mech.sigma[i, 2]),
         float(dsig_xy[i]))
        for i in range(grid.n_cells)])

    save_checkpoint(out_dir / f"final_state.{checkpoint_format}",
                    wf.state, fmt=checkpoint_format)
    mw0, mn0 = problem.flow.phase_mass(
        sp.state0.phase.p_w, sp.state0.phase.s_n, sp.state0.phi,
        1.0 + sp.state0.mech.eps_v)
    mw1, mn1 = problem.flow.phase_mass(
        wf.state.phase.p_w, wf.state.phase.s_n, wf.state.phi,
        1.0 + wf.state.mech.eps_v)
    episodes = sorted(wf.episode_events, key=lambda e: e.time)
    t_stop = wf.events[0].time if wf.events else None
    n_primary = sum(1 for e in episodes
                    if t_stop is not None and e.time <= t_stop + 1.0)
    summary = {
        "case": sp.spec.case,
        "failure_time_days": result.failure_time_days,
        "failure_fault": result.failure_fault,
        "failure_cells": list(result.failure_cells),
        "failure_cell_depths_m": [float(sp.spec.depth_top + sp.spec.extent
                                        - grid.cy[c])
                                  for c in result.failure_cells],
        "magnitudes": result.magnitudes,
        "primary_magnitude": episodes[0].magnitude if episodes else None,
        "n_episodes_during_injection": n_primary,
        "n_episodes": len(episodes),
        "episode_onsets_days": [e.time / 86400.0 for e in episodes],
        "episode_faults": [e.fault for e in episodes],
        "n_step_events": len(wf.events),
        "n_steps": len(wf.step_log),
        "porosity_law_residual": porosity_law_residual(problem, wf.state),
        "injection_active_at_end": wf.state.injection_active,
        "final_time_days": wf.state.t / 86400.0,
        "mass_balance_kg_per_m": {
            "water_initial": float(mw0.sum()),
            "water_final": float(mw1.sum()),
            "gas_initial": float(mn0.sum()),
            "gas_final": float(mn1.sum()),
        },
    }
    write_summary(out_dir / "summary.json", summary)
    logger.info("wrote %s", out_dir)
    return out_dir
