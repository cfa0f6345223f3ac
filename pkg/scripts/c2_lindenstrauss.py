"""Global and local Lindenstrauss identities on the l2 and l4 balls."""
import argparse

import numpy as np

from uc_kit import LpBall
from uc_kit import io as uio
from uc_kit import moduli as mod

ap = argparse.ArgumentParser()
ap.add_argument("--out", default="out/c2")
ap.add_argument("--seed", type=int, default=0)
args = ap.parse_args()

e1 = np.array([1.0, 0.0])
grid, eps = mod.default_tau_grid(20), mod.default_eps_grid()
for p in (2.0, 4.0):
    body = LpBall(p, 1.0, 2)
    g = mod.check_lindenstrauss_global(body, grid, eps, mod.Budget(), args.seed, tol=1e-2)
    loc = mod.check_lindenstrauss_local(body, grid, eps, e1, e1, mod.Budget(), args.seed, tol=1e-2)
    for name, rep in (("global", g), ("local", loc)):
        print(f"l{p:g} {name}: max |lhs - rhs| = {rep.max_discrepancy:.2e} passed={rep.passed}")
        uio.write_json(f"{args.out}/l{p:g}_{name}.json", rep.to_dict())
