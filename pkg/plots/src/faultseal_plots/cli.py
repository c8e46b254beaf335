"""``plots render`` command line.

Renders the figure set from completed run directories and verification
CSVs; ``--check`` runs the data-level assertions (early pressure rise in
the plate-drainage verification, safety-margin recovery after stress drops)
without producing images.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import figures
from .data import find_runs

FIG_BUILDERS = {
    "rockphys": ("rockphys_sweep.csv", "fig_rockphys.png"),
    "mandel": ("mandel.csv", "fig_mandel_overlay.png"),
    "injection1d": ("injection1d.csv", "fig_injection1d_overlay.png"),
    "ucs": ("ucs_protocol.csv", "fig_ucs_protocol.png"),
    "margins": (None, "fig_safety_margins.png"),
    "slip": (None, "fig_slip_profiles.png"),
    "probes": (None, "fig_probe_timeseries.png"),
    "profiles": (None, "fig_pressure_profiles.png"),
    "shear": (None, "fig_shear_change.png"),
}


def _find_input(name, search_dirs):
    for d in search_dirs:
        hit = Path(d) / name
        if hit.exists():
            return hit
        found = sorted(Path(d).rglob(name))
        if found:
            return found[0]
    return None


def render(fig_names, run_dirs, out_dir, check_only=False) -> list[str]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    runs = find_runs(run_dirs)
    produced, problems = [], []

    def want(name):
        return "all" in fig_names or name in fig_names

    if want("rockphys"):
        src = _find_input("rockphys_sweep.csv", run_dirs)
        if src and not check_only:
            figures.fig_rockphys(src, out_dir / FIG_BUILDERS["rockphys"][1])
            produced.append("rockphys")
    if want("mandel"):
        src = _find_input("mandel.csv", run_dirs)
        if src:
            if check_only:
                try:
                    figures.check_mandel_nonmonotone(src)
                    produced.append("mandel:check")
                except figures.CheckFailure as exc:
                    problems.append(f"mandel: {exc}")
            else:
                figures.fig_verification(src, out_dir / FIG_BUILDERS["mandel"][1],
                                         "plate drainage verification")
                produced.append("mandel")
    if want("injection1d"):
        src = _find_input("injection1d.csv", run_dirs)
        if src and not check_only:
            figures.fig_verification(
                src, out_dir / FIG_BUILDERS["injection1d"][1],
                "constrained injection verification")
            produced.append("injection1d")
    if want("ucs"):
        src = _find_input("ucs_protocol.csv", run_dirs)
        if src and not check_only:
            figures.fig_ucs(src, out_dir / FIG_BUILDERS["ucs"][1])
            produced.append("ucs")

    if runs:
        if want("margins"):
            if check_only:
                for rd in runs:
                    try:
                        figures.check_margin_recovery(rd)
                        produced.append(f"margins:check:{Path(rd).name}")
                    except figures.CheckFailure as exc:
                        problems.append(f"margins {Path(rd).name}: {exc}")
            else:
                figures.fig_safety_margins(runs, out_dir / FIG_BUILDERS["margins"][1])
                produced.append("margins")
        if not check_only:
            if want("slip"):
                figures.fig_slip_profiles(runs, out_dir / FIG_BUILDERS["slip"][1])
                produced.append("slip")
            if want("probes"):
                figures.fig_probe_timeseries(runs, out_dir / FIG_BUILDERS["probes"][1])
                produced.append("probes")
            if want("profiles"):
                figures.fig_pressure_profiles(runs, out_dir / FIG_BUILDERS["profiles"][1])
                produced.append("profiles")
            if want("shear"):
                figures.fig_shear_change_map(runs, out_dir / FIG_BUILDERS["shear"][1])
                produced.append("shear")

    if problems:
        raise figures.CheckFailure("; ".join(problems))
    return produced


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="plots", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)
    p = sub.add_parser("render", help="render figures from run outputs")
    p.add_argument("--fig", nargs="+", default=["all"],
                   help="figure names or 'all'")
    p.add_argument("--runs", nargs="+", required=True,
                   help="run directories (or parents of them)")
    p.add_argument("--out", required=True, help="output directory for images")
    p.add_argument("--check", action="store_true",
                   help="assert data-level properties instead of rendering")
    args = ap.parse_args(argv)

    try:
        produced = render(args.fig, args.runs, args.out,
                          check_only=args.check)
    except figures.CheckFailure as exc:
        print(f"check failed: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    verb = "checked" if args.check else "rendered"
    print(f"{verb}: {', '.join(produced) if produced else 'nothing to do'}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
