"""Command line interface.

Subcommands: ``simulate <config>`` (field scenario), ``verify mandel`` /
``verify injection1d`` (analytic verification with pass/fail), ``ucs
<config>`` (column sweep), ``rockphys --sweep`` (property table CSV),
``report <run-dir>`` (summarize a finished run).

Exit codes: 0 success, 2 configuration error, 3 solver failure,
4 verification tolerance exceeded.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_VERIFY = 4

logger = logging.getLogger("faultseal")


def _setup_logging(level: str):
    logging.basicConfig(level=getattr(logging, level.upper()),
                        format="%(levelname)s %(name)s: %(message)s")


def _threads(n: int | None):
    if n is not None:
        import os
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS",
                    "MKL_NUM_THREADS"):
            os.environ[var] = str(n)


def cmd_simulate(args) -> int:
    from .config import ConfigError, parse_config
    from .runner import run_from_config
    try:
        cfg = parse_config(args.config)
    except ConfigError as exc:
        print(exc, file=sys.stderr)
        return EXIT_CONFIG
    try:
        out_dir = run_from_config(cfg, args.config)
    except ValueError as exc:  # config kind not runnable here
        print(exc, file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # solver failures -> exit code 3
        logger.exception("run failed")
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    print(f"run complete; outputs in {out_dir}")
    return EXIT_OK


def cmd_verify(args) -> int:
    from .flow import FlowNonConvergence
    from .verification import (build_injection1d_problem, build_mandel_problem,
                               run_injection1d, run_mandel)
    try:
        if args.problem == "mandel":
            problem, spec = build_mandel_problem(scheme=args.scheme)
            report = run_mandel(problem, spec)
        else:
            problem, params, p_step = build_injection1d_problem(
                scheme=args.scheme)
            report = run_injection1d(problem, params, p_step)
    except FlowNonConvergence as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    if args.tol is not None:
        report.tolerance = args.tol
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        from .io import CsvWriter
        w = CsvWriter(out / f"{report.name}.csv",
                      ["x_m", "t_s", "analytic", "numeric", "error"])
        w.append([(x, t, a, b, b - a) for x, t, a, b in report.rows])
        print(f"wrote {out / (report.name + '.csv')}")
    print(report.summary())
    for t, e in zip(report.times, report.errors):
        print(f"  t = {t:10.4g} s   relative L2 = {e:.4%}")
    if report.name == "mandel":
        print(f"  early pressure rise ratio = {report.extras['peak_ratio']:.4f}")
    return EXIT_OK if report.passed else EXIT_VERIFY


def cmd_ucs(args) -> int:
    from .config import ConfigError, parse_config
    from .scenarios import UcsSpec, run_ucs, ucs_sweep
    try:
        cfg = parse_config(args.config)
        if cfg.kind != "ucs":
            raise ConfigError(["config kind is not 'ucs'"])
    except ConfigError as exc:
        print(exc, file=sys.stderr)
        return EXIT_CONFIG
    u = cfg.section("ucs")
    cem = cfg.section("ucs.cement")
    profile = u["porosity_profile"]
    spec = UcsSpec(radius=u["radius_m"], height=u["height_m"], nr=u["nr"],
                   nz=u["nz"], porosity=u["porosity"],
                   porosity_profile=tuple(profile) if profile else None,
                   strain_rate=u["strain_rate_per_s"],
                   end_strain=u["end_strain"], n_record=u["n_record"],
                   k_grain=cem["k_grain_pa"], g_grain=cem["g_grain_pa"],
                   k_cement=cem["k_cement_pa"], g_cement=cem["g_cement_pa"],
                   phi_c=cem["phi_c"], n_coord=cem["n_coord"])
    try:
        sweep = ucs_sweep(spec, u["phi_b_values"])
    except Exception as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    out = Path(args.out) if args.out else Path("ucs_out")
    out.mkdir(parents=True, exist_ok=True)
    from .io import CsvWriter, write_summary
    w = CsvWriter(out / "ucs_sweep.csv", ["phi_b", "e50_pa"])
    w.append(sorted(sweep.items()))
    records = CsvWriter(out / "ucs_protocol.csv",
                        ["phi_b", "strain", "stress_pa"])
    for pb in u["phi_b_values"]:
        from dataclasses import replace
        r = run_ucs(replace(spec, phi_b=float(pb)))
        records.append([(pb, e, s) for e, s in zip(r.strains, r.stresses)])
    write_summary(out / "summary.json",
                  {"e50_pa": {str(k): v for k, v in sweep.items()}})
    for pb, e in sorted(sweep.items()):
        print(f"phi_b = {pb:.3f}   E50 = {e / 1e6:8.1f} MPa")
    print(f"outputs in {out}")
    return EXIT_OK


def cmd_rockphys(args) -> int:
    from .io import CsvWriter
    from .rockphysics import (AnchoredPowerLaw, CementModelParams,
                              moduli_sweep)
    params = CementModelParams(
        k_grain=args.k_grain, g_grain=args.g_grain, k_cement=args.k_cement,
        g_cement=args.g_cement, phi_c=args.phi_c, phi_b=args.phi_b,
        n_coord=args.n_coord)
    law = None
    if args.perm_ref is not None:
        law = AnchoredPowerLaw(k_ref=args.perm_ref, phi_ref=args.perm_phi_ref,
                               exponent=args.perm_exponent)
    rows = moduli_sweep(params, n_points=args.points, perm_law=law)
    header = ["phi", "k_pa", "g_pa", "e_pa", "nu", "biot", "perm_m2"]
    if args.out:
        w = CsvWriter(args.out, header)
        w.append([tuple(r) for r in rows])
        print(f"wrote {args.out}")
    else:
        print(",".join(header))
        for r in rows:
            print(",".join(repr(float(v)) for v in r))
    return EXIT_OK


def cmd_report(args) -> int:
    run_dir = Path(args.run_dir)
    summary = run_dir / "summary.json"
    if not summary.exists():
        print(f"no summary.json under {run_dir}", file=sys.stderr)
        return EXIT_CONFIG
    doc = json.loads(summary.read_text())
    print(json.dumps(doc, indent=2, sort_keys=True))
    events = run_dir / "events.csv"
    if events.exists():
        lines = events.read_text().strip().splitlines()
        print(f"\nevents.csv: {max(len(lines) - 1, 0)} rows")
    return EXIT_OK


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="faultseal", description=__doc__)
    ap.add_argument("--log-level", default="warning",
                    choices=["debug", "info", "warning", "error"])
    ap.add_argument("--threads", type=int, default=None,
                    help="BLAS/OpenMP thread cap")
    sub = ap.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="run a scenario config")
    p_sim.add_argument("config")
    p_sim.set_defaults(func=cmd_simulate)

    p_ver = sub.add_parser("verify", help="verification against analytic references")
    p_ver.add_argument("problem", choices=["mandel", "injection1d"])
    p_ver.add_argument("--tol", type=float, default=None,
                       help="override the pass tolerance (relative L2)")
    p_ver.add_argument("--scheme", default="fixed_stress",
                       choices=["fixed_stress", "monolithic"])
    p_ver.add_argument("--out", default=None, help="directory for CSV output")
    p_ver.set_defaults(func=cmd_verify)

    p_ucs = sub.add_parser("ucs", help="column compression sweep")
    p_ucs.add_argument("config")
    p_ucs.add_argument("--out", default=None)
    p_ucs.set_defaults(func=cmd_ucs)

    p_rp = sub.add_parser("rockphys", help="property sweep table")
    p_rp.add_argument("--sweep", action="store_true", default=True)
    p_rp.add_argument("--k-grain", type=float, default=38e9)
    p_rp.add_argument("--g-grain", type=float, default=44e9)
    p_rp.add_argument("--k-cement", type=float, default=98e9)
    p_rp.add_argument("--g-cement", type=float, default=35e9)
    p_rp.add_argument("--phi-c", type=float, default=0.48)
    p_rp.add_argument("--phi-b", type=float, default=0.42)
    p_rp.add_argument("--n-coord", type=float, default=9.0)
    p_rp.add_argument("--points", type=int, default=200)
    p_rp.add_argument("--perm-ref", type=float, default=None)
    p_rp.add_argument("--perm-phi-ref", type=float, default=0.15)
    p_rp.add_argument("--perm-exponent", type=float, default=3.0)
    p_rp.add_argument("--out", default=None)
    p_rp.set_defaults(func=cmd_rockphys)

    p_rep = sub.add_parser("report", help="summarize a run directory")
    p_rep.add_argument("run_dir")
    p_rep.set_defaults(func=cmd_report)

    args = ap.parse_args(argv)
    _setup_logging(args.log_level)
    _threads(args.threads)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
