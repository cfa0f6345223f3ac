"""Estimated delta of the l2 ball against the closed form, dims 2-5."""
import argparse
import time

import numpy as np

from uc_kit import LpBall
from uc_kit import io as uio
from uc_kit import moduli as mod

ap = argparse.ArgumentParser()
ap.add_argument("--out", default="out/c1")
ap.add_argument("--seed", type=int, default=0)
args = ap.parse_args()

rows = []
for m in (2, 3, 4, 5):
    t = time.perf_counter()
    c = mod.delta_curve(LpBall(2.0, 1.0, m), mod.default_eps_grid(), mod.Budget(), args.seed)
    secs = time.perf_counter() - t
    exact = mod.analytic_l2_delta(c.grid)
    err = np.abs(c.values - exact)
    print(f"m={m}: max err {err.max():.2e}, {secs:.1f}s")
    rows += [{"dim": m, "eps": e, "estimate": v, "exact": x} for e, v, x in zip(c.grid, c.values, exact)]
uio.write_csv(f"{args.out}/delta_l2.csv", rows, ["dim", "eps", "estimate", "exact"])
