"""Rademacher complexity of linear predictors over l2 and l4 balls versus n."""
import argparse

from uc_kit import LpBall
from uc_kit import io as uio
from uc_kit import moduli as mod
from uc_kit import rademacher as rad

ap = argparse.ArgumentParser()
ap.add_argument("--out", default="out/c7")
ap.add_argument("--trials", type=int, default=2000)
args = ap.parse_args()

n_grid = [2 ** j for j in range(4, 13)]
for p, dim, dist in ((2.0, 3, "gaussian_clipped"), (4.0, 65536, "basis")):
    params = mod.fit_uc_params(mod.delta_curve(LpBall(p, 1.0, 2), mod.default_eps_grid(), mod.Budget(), 0))
    rep = rad.check_rademacher_bound(LpBall(p, 1.0, dim), params, rad.DataModel(dim, dist), n_grid,
                                     trials=args.trials, seed=0)
    print(f"l{p:g} m={dim}: slope {rep.slope:.4f} (theory {-1 / p}), chained constant {rep.chained_constant:.3f}")
    uio.write_json(f"{args.out}/l{p:g}.json", rep)
