#!/usr/bin/env python3
"""Affine fits of ln(lbmo + ll) for several mollification levels and seeds.

    python3 scripts/growth_sweep.py --mollify 8 16 --seeds 0 1 --grid 128 --T 1
"""

from __future__ import annotations

import argparse

from lbmo_euler.experiments import ExperimentConfig, growth_fit, run_scenario


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--mollify", type=int, nargs="+", default=[8, 16])
    ap.add_argument("--seeds", type=int, nargs="+", default=[0])
    ap.add_argument("--grid", type=int, default=256)
    ap.add_argument("--dt", type=float, default=4e-3)
    ap.add_argument("--T", type=float, default=2.0)
    args = ap.parse_args()

    print(f"{'n':>4s} {'seed':>4s} {'a':>8s} {'b':>8s} {'max_res':>8s} {'lbmo(T)':>8s}")
    for n in args.mollify:
        for seed in args.seeds:
            cfg = ExperimentConfig("growth", seed=seed, grid=args.grid, dt=args.dt, T=args.T, mollify_n=n)
            tab = run_scenario(cfg).tables["diagnostics.csv"]
            fit = growth_fit(tab)
            if fit is None:
                print(f"{n:4d} {seed:4d}  degenerate")
                continue
            a, b, _, _, res = fit
            print(f"{n:4d} {seed:4d} {a:8.4f} {b:8.4f} {res.max():8.4f} {tab.column('lbmo')[-1]:8.4f}")


if __name__ == "__main__":
    main()
