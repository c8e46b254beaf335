"""Figure builders. Each takes source files and an output path.

Every builder has a sibling ``check_*`` assertion where the underlying data
carries a physical signature worth guarding (used by ``plots render
--check`` without rendering anything).
"""

from __future__ import annotations

from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .data import read_csv, read_summary


class CheckFailure(AssertionError):
    pass


def fig_rockphys(sweep_csv, out_path):
    """Two-panel stiffness / permeability vs porosity."""
    d = read_csv(sweep_csv, required=["phi", "k_pa", "g_pa", "perm_m2"])
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.6))
    ax1.plot(d["phi"], d["k_pa"] / 1e9, label="bulk")
    ax1.plot(d["phi"], d["g_pa"] / 1e9, label="shear")
    ax1.set_xlabel("porosity")
    ax1.set_ylabel("modulus [GPa]")
    ax1.legend()
    good = np.isfinite(d["perm_m2"])
    if good.any():
        ax2.semilogy(d["phi"][good], d["perm_m2"][good])
    ax2.set_xlabel("porosity")
    ax2.set_ylabel("permeability [m$^2$]")
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)


def fig_verification(verify_csv, out_path, title):
    """Analytic/numeric overlay with the worst deviation annotated."""
    d = read_csv(verify_csv, required=["x_m", "t_s", "analytic", "numeric"])
    fig, ax = plt.subplots(figsize=(6, 4))
    worst = 0.0
    for t in np.unique(d["t_s"]):
        sel = d["t_s"] == t
        order = np.argsort(d["x_m"][sel])
        x = d["x_m"][sel][order]
        a = d["analytic"][sel][order]
        n = d["numeric"][sel][order]
        line, = ax.plot(x, a, lw=1.2, label=f"t = {t:.3g} s")
        ax.plot(x, n, "o", ms=2.5, color=line.get_color())
        scale = np.abs(a).max()
        if scale > 0:
            worst = max(worst, np.abs(a - n).max() / scale)
    ax.set_xlabel("x [m]")
    ax.set_ylabel("pressure")
    ax.set_title(f"{title} (max deviation {worst:.2%})")
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)


def check_mandel_nonmonotone(verify_csv):
    """Center pressure must rise above its earliest sample before decaying."""
    d = read_csv(verify_csv, required=["x_m", "t_s", "numeric"])
    x_center = d["x_m"].min()
    sel = d["x_m"] == x_center
    t = d["t_s"][sel]
    p = d["numeric"][sel]
    order = np.argsort(t)
    p = p[order]
    if len(p) < 3:
        raise CheckFailure("not enough center-line samples")
    if not (p.max() > p[0] and p[-1] < p.max()):
        raise CheckFailure(
            f"no early pressure rise: first {p[0]:.4g}, max {p.max():.4g}, "
            f"last {p[-1]:.4g}")


def fig_ucs(protocol_csv, out_path):
    d = read_csv(protocol_csv, required=["phi_b", "strain", "stress_pa"])
    fig, ax = plt.subplots(figsize=(5.5, 4))
    for pb in np.unique(d["phi_b"]):
        sel = d["phi_b"] == pb
        ax.plot(d["strain"][sel] * 100, -d["stress_pa"][sel] / 1e6,
                label=f"well-sorted porosity {pb:g}")
    ax.set_xlabel("axial strain [%]")
    ax.set_ylabel("axial stress [MPa]")
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)


def fig_safety_margins(run_dirs, out_path):
    """Margin histories of the cells that failed in each run."""
    fig, ax = plt.subplots(figsize=(6.5, 4))
    any_curve = False
    for rd in run_dirs:
        summary = read_summary(rd)
        cells = summary.get("failure_cells") or []
        if not cells:
            continue
        m = read_csv(Path(rd) / "fault_margins.csv",
                     required=["t_s", "cell", "margin_pa"])
        for c in cells:
            sel = m["cell"] == float(c)
            if not sel.any():
                continue
            t = m["t_s"][sel] / 86400.0
            ax.plot(t, m["margin_pa"][sel] / 1e6,
                    label=f"{summary['case']} cell {c}")
            any_curve = True
    if not any_curve:
        ax.text(0.5, 0.5, "no failed cells", ha="center", va="center",
                transform=ax.transAxes)
    ax.axhline(0.0, color="k", lw=0.6)
    ax.set_xlabel("time [days]")
    ax.set_ylabel("pressure safety margin [MPa]")
    if any_curve:
        ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)


def check_margin_recovery(run_dir):
    """After the stress drop the failed cell's margin must increase."""
    summary = read_summary(run_dir)
    cells = summary.get("failure_cells") or []
    if not cells:
        raise CheckFailure(f"{run_dir}: no failure recorded")
    m = read_csv(Path(run_dir) / "fault_margins.csv",
                 required=["t_s", "cell", "margin_pa"])
    t_fail = summary["failure_time_days"] * 86400.0
    for c in cells:
        sel = m["cell"] == float(c)
        t = m["t_s"][sel]
        v = m["margin_pa"][sel]
        before = v[t <= t_fail + 1.0]
        after = v[t > t_fail + 1.0]
        if len(before) == 0 or len(after) == 0:
            raise CheckFailure(f"cell {c}: margin trace does not span the event")
        if not after.max() > before.min():
            raise CheckFailure(
                f"cell {c}: margin did not recover after the stress drop "
                f"(min before {before.min():.4g}, max after {after.max():.4g})")


def fig_slip_profiles(run_dirs, out_path):
    fig, axes = plt.subplots(1, max(len(run_dirs), 1),
                             figsize=(3.2 * max(len(run_dirs), 1), 4),
                             squeeze=False)
    for ax, rd in zip(axes[0], run_dirs):
        summary = read_summary(rd)
        d = read_csv(Path(rd) / "slip_profiles.csv",
                     required=["fault", "y_m", "slip_m"])
        if len(d["y_m"]) == 0 or not np.any(d["slip_m"] > 0):
            ax.text(0.5, 0.5, "no events", ha="center", va="center",
                    transform=ax.transAxes)
        else:
            for fault in np.unique(d["fault"]):
                sel = d["fault"] == fault
                ax.plot(d["slip_m"][sel] * 1e3, d["y_m"][sel], ".-", ms=3,
                        label=str(fault))
            ax.legend(fontsize=7)
        ax.set_title(f"case {summary.get('case', '?')}")
        ax.set_xlabel("total slip [mm]")
        ax.set_ylabel("elevation [m]")
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)


def fig_probe_timeseries(run_dirs, out_path):
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(6.5, 6), sharex=True)
    for rd in run_dirs:
        summary = read_summary(rd)
        d = read_csv(Path(rd) / "timeseries.csv",
                     required=["t_s", "probe_id", "p_w", "s_n"])
        sel = d["probe_id"] == 0.0
        t = d["t_s"][sel] / 86400.0
        ax1.plot(t, d["p_w"][sel] / 1e6, label=f"case {summary['case']}")
        ax2.plot(t, d["s_n"][sel])
    ax1.set_ylabel("pore pressure [MPa]")
    ax1.legend(fontsize=8)
    ax2.set_ylabel("gas saturation [-]")
    ax2.set_xlabel("time [days]")
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)


def fig_pressure_profiles(run_dirs, out_path):
    fig, axes = plt.subplots(1, max(len(run_dirs), 1),
                             figsize=(3.5 * max(len(run_dirs), 1), 3.6),
                             squeeze=False, sharey=True)
    for ax, rd in zip(axes[0], run_dirs):
        summary = read_summary(rd)
        d = read_csv(Path(rd) / "profiles.csv",
                     required=["t_s", "x_m", "p_w"])
        times = np.unique(d["t_s"])
        picks = times[np.linspace(0, len(times) - 1, min(6, len(times))).astype(int)]
        for t in picks:
            sel = d["t_s"] == t
            order = np.argsort(d["x_m"][sel])
            ax.plot(d["x_m"][sel][order], d["p_w"][sel][order] / 1e6,
                    label=f"{t/86400:.1f} d")
        ax.set_title(f"case {summary['case']}")
        ax.set_xlabel("x [m]")
        ax.legend(fontsize=6)
    axes[0][0].set_ylabel("pore pressure [MPa]")
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)


def fig_shear_change_map(run_dirs, out_path):
    fig, axes = plt.subplots(1, max(len(run_dirs), 1),
                             figsize=(4.2 * max(len(run_dirs), 1), 3.8),
                             squeeze=False)
    for ax, rd in zip(axes[0], run_dirs):
        summary = read_summary(rd)
        d = read_csv(Path(rd) / "field_final.csv",
                     required=["x_m", "y_m", "dsigma_xy"])
        sc = ax.scatter(d["x_m"], d["y_m"], c=d["dsigma_xy"] / 1e6, s=4,
                        cmap="coolwarm")
        fig.colorbar(sc, ax=ax, label="shear change [MPa]")
        ax.set_title(f"case {summary['case']}")
        ax.set_xlabel("x [m]")
        ax.set_ylabel("y [m]")
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
