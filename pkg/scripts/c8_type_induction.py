"""Type-q inequality for all sign patterns, Euclidean and the l4 pipeline constant."""
from uc_kit import LpBall
from uc_kit import moduli as mod
from uc_kit import rademacher as rad

eu = rad.check_type_induction(LpBall(2.0, 1.0, 4), 2.0, 2.0, sequences=200, seed=0, n_max=12)
print(f"l2, c'=2: {eu.violations} violations, equality error {eu.max_equality_error:.1e}")

fit = mod.fit_uc_params(mod.delta_curve(LpBall(4.0, 1.0, 2), mod.default_eps_grid(), mod.Budget(), 0))
C, steps = rad.chained_type_constant(fit)
for s in steps:
    print(f"  {s.from_item} -> {s.to_item}: {s.out_params}")
rep = rad.check_type_induction(LpBall(4.0, 1.0, 3).polar(), fit.q, C * fit.q, sequences=200, seed=0, n_max=12)
print(f"l4 pipeline q={fit.q:.4f} c'={C * fit.q:.3f}: {rep.violations} violations, max ratio {rep.max_ratio:.3f}")
