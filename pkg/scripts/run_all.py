#!/usr/bin/env python3
"""Run every scenario with default settings and print a verdict table.

    python3 scripts/run_all.py --out runs --seed 0 [--skip flow-modulus]
"""

from __future__ import annotations

import argparse
import time
from pathlib import Path

from lbmo_euler.experiments import SCENARIOS, ExperimentConfig, run_scenario, write_outputs


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--out", default="runs")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--skip", nargs="*", default=[], choices=SCENARIOS)
    args = ap.parse_args()

    failed = []
    for name in SCENARIOS:
        if name in args.skip:
            continue
        cfg = ExperimentConfig(name, seed=args.seed, out_dir=str(Path(args.out) / f"{name}-seed{args.seed}"))
        t0 = time.perf_counter()
        res = run_scenario(cfg)
        write_outputs(res, cfg)
        status = "PASS" if res.passed else "FAIL"
        print(f"{status}  {name:14s} {time.perf_counter() - t0:7.1f} s  -> {cfg.out_dir}")
        for k, v in res.verdicts.items():
            print(f"        {k}: {v}")
        if not res.passed:
            failed.append(name)
    raise SystemExit(1 if failed else 0)


if __name__ == "__main__":
    main()
