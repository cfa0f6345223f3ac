"""Closed-form Hessian determinant of ||x||_p^2 against finite differences."""
import argparse

import numpy as np

from uc_kit import duality as dual
from uc_kit import geometry as geo
from uc_kit import io as uio

ap = argparse.ArgumentParser()
ap.add_argument("--out", default="out/c4")
ap.add_argument("--seed", type=int, default=0)
args = ap.parse_args()

rng = np.random.default_rng(args.seed)
rows = []
for m in (2, 3):
    for p in (3.0, 4.0, 6.0):
        done = 0
        while done < 20:
            x = rng.uniform(0.1, 1.0, m) * rng.choice([-1.0, 1.0], m)
            x /= geo.lp_norm(x, p)
            if np.min(np.abs(x)) < 0.1:
                continue
            a = dual.lp_hessian_det(x, p).value
            fd = np.linalg.det(dual.fd_hessian(dual.lp_squared(p), x))
            rows.append({"dim": m, "p": p, "closed": a, "fd": fd, "rel_err": abs(fd - a) / abs(a)})
            done += 1
print(f"{len(rows)} points, worst relative error {max(r['rel_err'] for r in rows):.2e}")
print("e1 in l4:", dual.lp_hessian_det([1.0, 0.0, 0.0], 4.0))
uio.write_csv(f"{args.out}/hessian.csv", rows, ["dim", "p", "closed", "fd", "rel_err"])
