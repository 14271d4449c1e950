"""Command-line entry point.

Exit codes: 0 all verdicts pass, 1 a verdict failed, 2 usage or I/O error,
3 numerical abort.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from .biot_savart import SpectralWorkspace, upsample
from .experiments import (
    SCENARIOS,
    ExperimentConfig,
    InternalError,
    load_config,
    load_frames,
    recompute_report,
    run_scenario,
    write_outputs,
    write_table,
    Table,
)
from .f2d import F2DFormatError, load_scalar
from .flow import CFLError, FlowInvariantError, VelocitySeries, check_flow_modulus
from .norms import lbmo_estimate, make_ball_family, max_j
from .solver import NumericalAbort, SolverCFLError, velocity_of

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_ABORT = 0, 1, 2, 3
NUMERICAL = (NumericalAbort, SolverCFLError, CFLError, FlowInvariantError, InternalError)


def _emit(obj) -> None:
    print(json.dumps(obj, indent=2, sort_keys=True))


def _finish(res, cfg: ExperimentConfig) -> int:
    out = write_outputs(res, cfg)
    for name, ok in res.verdicts.items():
        tag = "skip" if ok == "skip" else ("PASS" if ok else "FAIL")
        print(f"{tag:4s}  {name}")
    print(f"outputs in {out}")
    return EXIT_OK if res.passed else EXIT_FAIL


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    if args.out:
        cfg.out_dir = args.out
    return _finish(run_scenario(cfg), cfg)


def cmd_verify(args) -> int:
    if args.scenario not in SCENARIOS:
        print(f"unknown scenario {args.scenario!r}; known scenarios: {', '.join(SCENARIOS)}", file=sys.stderr)
        return EXIT_USAGE
    over = {}
    for item in args.set or []:
        k, _, v = item.partition("=")
        if not _:
            raise ValueError(f"--set expects key=value, got {item!r}")
        try:
            over[k] = json.loads(v)
        except json.JSONDecodeError:
            over[k] = v
    d = {"scenario": args.scenario, "seed": args.seed, **over}
    if args.out:
        d["out_dir"] = args.out
    cfg = ExperimentConfig.from_mapping(d)
    return _finish(run_scenario(cfg), cfg)


def cmd_norms(args) -> int:
    fld = load_scalar(args.field)
    j_max, centers = max_j(fld.grid), 16
    if args.family:
        parts = args.family.split(",")
        j_max = int(parts[0])
        if len(parts) > 1:
            centers = int(parts[1])
    fam = make_ball_family(fld.grid, j_max, centers, args.seed)
    rep = lbmo_estimate(fld, fam, ps=(2.0, math.inf))
    out = rep.flat()
    out["family"] = fam.describe()
    text = json.dumps(out, indent=2, sort_keys=True)
    if args.out:
        Path(args.out).write_text(text + "\n")
    print(text)
    return EXIT_OK


def cmd_flow(args) -> int:
    times, frames = load_frames(args.run_dir)
    ws = SpectralWorkspace(frames[0].grid)
    vel = VelocitySeries(times, [upsample(velocity_of(w, ws), args.refine) for w in frames])
    dt = args.dt or min(1e-2, 0.4 * frames[0].grid.h / max(vel.max_speed(), 1e-300))
    rows = check_flow_modulus(vel, frames[0].grid, dt, args.times, args.pair_budget, args.ll_budget, args.seed)
    tab = Table(["t", "star", "bound", "ratio", "warning"],
                [[r.t, r.star, r.bound, r.ratio, r.warning] for r in rows])
    write_table(Path(args.run_dir) / "flow.csv", tab)
    ok = all(r.ratio <= args.ratio_max for r in rows)
    for r in rows:
        flag = " (estimator gap)" if r.warning else ""
        print(f"t={r.t:g}  star={r.star:.6g}  bound={r.bound:.6g}  ratio={r.ratio:.4f}{flag}")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_report(args) -> int:
    rep = recompute_report(args.out_dir)
    Path(args.out_dir, "report.json").write_text(json.dumps(rep, indent=2, sort_keys=True) + "\n")
    _emit(rep)
    return EXIT_OK if rep["passed"] else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lbmo-euler", description="Numerical checks for 2D Euler with LBMO vorticity.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run the scenario described by a TOML or JSON config")
    p.add_argument("config")
    p.add_argument("--out", help="override out_dir")
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("verify", help="run one scenario with default settings")
    p.add_argument("scenario", help=f"one of: {', '.join(SCENARIOS)}")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="output directory (default runs/<scenario>-seed<N>)")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config field")
    p.set_defaults(fn=cmd_verify)

    p = sub.add_parser("norms", help="Lp / BMO / LBMO estimates of an F2D scalar field")
    p.add_argument("field")
    p.add_argument("--family", metavar="J_MAX[,CENTERS]", help="ball family depth and centers per scale")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="also write the JSON here")
    p.set_defaults(fn=cmd_norms)

    p = sub.add_parser("flow", help="flow-map modulus of a saved run against exp(int ll)")
    p.add_argument("run_dir")
    p.add_argument("--times", type=float, nargs="+", required=True)
    p.add_argument("--dt", type=float)
    p.add_argument("--refine", type=int, default=4, help="spectral refinement of velocity frames")
    p.add_argument("--pair-budget", type=int, default=20000)
    p.add_argument("--ll-budget", type=int, default=4000)
    p.add_argument("--ratio-max", type=float, default=1.1)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=cmd_flow)

    p = sub.add_parser("report", help="recompute verdicts from the CSVs in an output directory")
    p.add_argument("out_dir")
    p.set_defaults(fn=cmd_report)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except NUMERICAL as err:
        print(f"numerical abort: {err}", file=sys.stderr)
        return EXIT_ABORT
    except (ValueError, OSError, F2DFormatError, KeyError, json.JSONDecodeError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
