#!/usr/bin/env python3
"""Sup norm and LBMO estimate of ln(1 - ln|x|) along a refinement ladder.

The sup keeps growing like ln(1 + ln(2/h)) while the LBMO estimate levels
off.  A sign function is printed alongside for contrast.

    python3 scripts/lbmo_ladder.py --grids 256 512 1024 2048 --centers 16
"""

from __future__ import annotations

import argparse
import math

from lbmo_euler.experiments import ladder_field
from lbmo_euler.fields import GridSpec
from lbmo_euler.norms import lbmo_estimate, make_ball_family, max_j


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--grids", type=int, nargs="+", default=[256, 512, 1024, 2048])
    ap.add_argument("--window", type=float, nargs=2, default=[-2.0, 2.0])
    ap.add_argument("--centers", type=int, default=16)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    print(f"{'field':8s} {'n':>6s} {'j_max':>5s} {'sup':>8s} {'bmo':>8s} {'lbmo':>8s}")
    for kind in ("example", "sign"):
        for n in args.grids:
            g = GridSpec.window(n, *args.window)
            fam = make_ball_family(g, max_j(g), args.centers, args.seed)
            rep = lbmo_estimate(ladder_field(kind, g), fam, ps=(math.inf,))
            print(f"{kind:8s} {n:6d} {max_j(g):5d} {rep.lp['inf']:8.4f} {rep.bmo:8.4f} {rep.lbmo:8.4f}")


if __name__ == "__main__":
    main()
