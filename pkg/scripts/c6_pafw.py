"""PAFW rates on l2 (exterior b), l4 and l5 (optimum at e1), with the l2 envelope."""
import argparse

import numpy as np

from uc_kit import LpBall
from uc_kit import io as uio
from uc_kit import moduli as mod
from uc_kit import solvers as sol

ap = argparse.ArgumentParser()
ap.add_argument("--out", default="out/c6")
ap.add_argument("--iters", type=int, default=100_000)
ap.add_argument("--seeds", type=int, default=5)
args = ap.parse_args()

l2 = LpBall(2.0, 1.0, 2)
obj = sol.make_objective({"kind": "quadratic", "b": [2.0, 0.0]}, l2)
tr = sol.pafw(obj, l2, args.iters)
alpha = mod.fit_uc_params(mod.delta_curve(l2, mod.default_eps_grid(), mod.Budget(), 0), exponent=2.0).alpha
env = sol.pafw_envelope(tr.k[1:], 2.0, obj.smoothness_L, sol.lp_diameter(l2), alpha, obj.grad_lower_bound_c)
print(f"l2: exponent {sol.fit_rate(tr, obj.fstar).exponent_or_ratio:.3f}, "
      f"max gap/envelope {np.max((tr.f_value[1:] - obj.fstar) / env):.2e}")

rows = []
for p in (4.0, 5.0):
    body = LpBall(p, 1.0, 2)
    obj = sol.quadratic_with_optimum(body, np.array([1.0, 0.0]), 0.5)
    exps = []
    for s in range(args.seeds):
        tr = sol.pafw(obj, body, args.iters, seed=s)
        exps.append(sol.fit_rate(tr, obj.fstar).exponent_or_ratio)
        rows += [{"p": p, "seed": s, "k": k, "primal_gap": g}
                 for k, g in zip(tr.k[::100], (tr.f_value - obj.fstar)[::100])]
    print(f"l{p:g}: mean exponent {np.mean(exps):.3f} (envelope {sol.envelope_exponent(p):.3f})")
uio.write_csv(f"{args.out}/gaps.csv", rows, ["p", "seed", "k", "primal_gap"])
