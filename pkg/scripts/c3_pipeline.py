"""Fit (alpha, p) for the l4 ball, transfer to the scaling inequality, sample it."""
import argparse

from uc_kit import LpBall
from uc_kit import certify as cert
from uc_kit import duality as dual
from uc_kit import io as uio
from uc_kit import moduli as mod

ap = argparse.ArgumentParser()
ap.add_argument("--out", default="out/c3")
ap.add_argument("--seed", type=int, default=0)
ap.add_argument("--samples", type=int, default=100_000)
args = ap.parse_args()

body = LpBall(4.0, 1.0, 2)
fit = mod.fit_uc_params(mod.delta_curve(body, mod.default_eps_grid(), mod.Budget(), args.seed))
chain = dual.compose_transfers("cab", fit)
for step in chain:
    print(f"{step.from_item} -> {step.to_item}: {step.out_params}")
b = chain[-1].out_params
rep = cert.check_global_scaling(body, b.alpha, b.exponent, args.samples, seed=args.seed, margin=0.1)
print(f"fit alpha={fit.alpha:.4g} p={fit.exponent:.3f}; violations {rep.violations}/{args.samples}")
uio.write_json(f"{args.out}/report.json", {"fit": fit, "scaling": b, "report": rep})
