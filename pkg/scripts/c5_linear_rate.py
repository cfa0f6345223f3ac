"""Vanilla FW on an l4 ball, exterior optimum: line search vs the agnostic rule."""
import argparse

import numpy as np

from uc_kit import LpBall
from uc_kit import io as uio
from uc_kit import solvers as sol

ap = argparse.ArgumentParser()
ap.add_argument("--out", default="out/c5")
ap.add_argument("--iters", type=int, default=2000)
args = ap.parse_args()

body = LpBall(4.0, 1.0, 10)
t = np.random.default_rng(0).uniform(0.1, 0.2, 9)
xstar = np.concatenate([[(1 - np.sum(t ** 4)) ** 0.25], t])
obj = sol.quadratic_with_optimum(body, xstar, 0.5)
rows = []
for rule in ("line_search", "agnostic"):
    tr = sol.vanilla_fw(obj, body, rule, args.iters)
    fit = sol.fit_rate(tr, obj.fstar, window=(50, args.iters))
    print(f"{rule}: {fit.model} {fit.exponent_or_ratio:.4f} (r2 {fit.r_squared:.3f})")
    rows += [{"rule": rule, "k": k, "primal_gap": g} for k, g in zip(tr.k, tr.f_value - obj.fstar)]
path = uio.write_csv(f"{args.out}/gaps.csv", rows, ["rule", "k", "primal_gap"])
uio.plot_xy_from_csv(path, f"{args.out}/gaps.svg", "k", "primal_gap", "rule", logx=True, logy=True)
