"""Rademacher constants of gauge-bounded linear predictors.

For the class {x -> <w, x> : gauge_C(w) <= 1} the supremum over w is the
support function, so R_n = E sigma_C((1/n) sum eps_i x_i), estimated here by
Monte Carlo over fresh signs and data in every trial.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from numpy.typing import NDArray

from . import duality as dual
from .geometry import ConvexBody, LpBall
from .moduli import NotUC, UCParams

DISTRIBUTIONS = ("sphere_uniform_in_polar_gauge", "gaussian_clipped", "fixed_points", "basis")
ENUM_CUTOFF = 16


class RademacherError(ValueError):
    pass


@dataclass
class DataModel:
    """Bounded data for the predictors; every sample has sigma_C(x) <= D_bound.

    ``basis`` draws signed canonical vectors scaled to polar gauge D_bound, with
    replacement. In high dimension this is the extremal design for which the
    n^(-1/p) rate is attained; it is stored sparsely.
    """

    dim: int
    distribution: str = "sphere_uniform_in_polar_gauge"
    D_bound: float = 1.0
    sigma: float = 0.5
    points: Optional[NDArray] = None

    def __post_init__(self):
        if self.distribution not in DISTRIBUTIONS:
            raise RademacherError(f"unknown distribution {self.distribution!r}")
        if not self.D_bound > 0:
            raise RademacherError("D_bound must be positive")
        if self.distribution == "fixed_points":
            if self.points is None:
                raise RademacherError("fixed_points needs points")
            self.points = np.atleast_2d(np.asarray(self.points, dtype=float))
            if self.points.shape[1] != self.dim:
                raise RademacherError("points dimension mismatch")

    def sample(self, body: ConvexBody, shape: tuple, rng: np.random.Generator) -> NDArray:
        """Dense samples of shape ``shape + (dim,)``."""
        m = self.dim
        D = self.D_bound
        if self.distribution == "fixed_points":
            n = shape[-1]
            idx = np.arange(n) % len(self.points)
            x = np.broadcast_to(self.points[idx], shape + (m,)).copy()
            s = body._support(x)
            if np.any(s > D + 1e-9):
                raise RademacherError("fixed points exceed D_bound in the polar gauge")
            return x
        if self.distribution == "basis":
            j = rng.integers(0, m, shape)
            x = np.zeros(shape + (m,))
            np.put_along_axis(x, j[..., None], rng.choice([-1.0, 1.0], shape)[..., None], axis=-1)
            return D * x / body._support(x)[..., None]
        g = rng.standard_normal(shape + (m,))
        s = body._support(g)
        if self.distribution == "sphere_uniform_in_polar_gauge":
            return D * g / s[..., None]
        g = self.sigma * D * g
        s = self.sigma * D * s
        return g * np.minimum(1.0, D / np.maximum(s, 1e-300))[..., None]


def _basis_lp_sums(body: LpBall, data: DataModel, n: int, trials: int, rng) -> NDArray:
    """sigma_C((1/n) sum eps_i x_i) for basis data on an lp ball, without dense arrays."""
    out = np.empty(trials)
    m = data.dim
    chunk = max(1, int(4_000_000 // m))
    for s in range(0, trials, chunk):
        t = min(chunk, trials - s)
        j = rng.integers(0, m, (t, n)) + (np.arange(t) * m)[:, None]
        e = rng.choice([-1.0, 1.0], (t, n))
        acc = np.bincount(j.ravel(), weights=e.ravel(), minlength=t * m).reshape(t, m)
        # sigma_C(e_j) = r, so each basis sample is (D / r) e_j
        acc *= data.D_bound / body.r
        out[s:s + t] = body._support(acc) / n
    return out


def rademacher_samples(body: ConvexBody, data: DataModel, n: int, trials: int, seed: int) -> NDArray:
    if n < 1 or trials < 1:
        raise RademacherError("need n >= 1 and trials >= 1")
    if data.dim != body.dim:
        raise RademacherError("data and body dimensions differ")
    rng = np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(n,)))
    if data.distribution == "basis" and isinstance(body, LpBall):
        return _basis_lp_sums(body, data, n, trials, rng)
    out = np.empty(trials)
    chunk = max(1, int(2_000_000 // (n * data.dim)))
    for s in range(0, trials, chunk):
        t = min(chunk, trials - s)
        x = data.sample(body, (t, n), rng)
        eps = rng.choice([-1.0, 1.0], (t, n))
        out[s:s + t] = body._support(np.einsum("tn,tnm->tm", eps, x) / n)
    return out


def estimate_rademacher(body: ConvexBody, data: DataModel, n: int, trials: int = 2000,
                        seed: int = 0) -> tuple[float, float]:
    """Monte-Carlo mean and standard error of sigma_C((1/n) sum eps_i x_i)."""
    v = rademacher_samples(body, data, n, trials, seed)
    se = float(v.std(ddof=1) / np.sqrt(trials)) if trials > 1 else float("nan")
    return float(v.mean()), se


def brute_force_sup(body: ConvexBody, s: NDArray, n_w: int, rng: np.random.Generator) -> float:
    """max <w, s> over sampled boundary points w of C; a lower bound on sigma_C(s)."""
    g = rng.standard_normal((n_w, body.dim))
    w = g / body._gauge(g)[:, None]
    return float(np.max(w @ s))


# ------------------------------------------------------------------ rate check


def chained_type_constant(params: UCParams) -> tuple[float, list]:
    """Type constant C = c'/q for the polar norm, via the clauses c -> a -> b -> d -> e."""
    p0 = UCParams(params.alpha, params.exponent, "1c")
    steps = dual.compose_transfers("cabde", p0)
    e = steps[-1].out_params
    return e.alpha / e.exponent, steps


@dataclass
class RademacherReport:
    n_grid: list
    means: list
    stderrs: list
    trials: int
    slope: Optional[float]
    predicted_slope: float
    empirical_constant: float
    chained_constant: Optional[float]
    D: float
    distribution: str
    seed: int
    body: dict = field(default_factory=dict)

    def slope_ok(self, tol: float) -> bool:
        return self.slope is not None and abs(self.slope - self.predicted_slope) <= tol

    def rows(self):
        for n, m, s in zip(self.n_grid, self.means, self.stderrs):
            yield {"n": n, "mean": m, "stderr": s, "trials": self.trials,
                   "body": self.body.get("label", ""), "distribution": self.distribution, "seed": self.seed}


def check_rademacher_bound(body: ConvexBody, params, data: DataModel, n_grid: Sequence[int],
                           trials: int = 2000, seed: int = 0) -> RademacherReport:
    """Slope of log R_n vs log n against -1/p, plus the smallest admissible C^(1/q)."""
    if isinstance(params, NotUC) or params is None:
        raise RademacherError("body is not certified uniformly convex")
    p = params.p
    q = p / (p - 1.0)
    n_grid = [int(n) for n in n_grid]
    means, ses = [], []
    for n in n_grid:
        m, s = estimate_rademacher(body, data, n, trials, seed)
        means.append(m)
        ses.append(s)
    slope = None
    if len(n_grid) >= 2:
        slope = float(np.polyfit(np.log(n_grid), np.log(means), 1)[0])
    emp = float(max(m * n ** (1.0 / p) / data.D_bound for n, m in zip(n_grid, means)))
    chained = None
    try:
        C, _ = chained_type_constant(params)
        chained = float(C ** (1.0 / q))
    except (ValueError, dual.DualityError):
        pass
    d = body.to_dict()
    d["label"] = body.label()
    return RademacherReport(n_grid, means, ses, trials, slope, -1.0 / p, emp, chained, data.D_bound,
                            data.distribution, seed, d)


# -------------------------------------------------------------- type induction


def _signs(n: int) -> NDArray:
    return np.array(list(itertools.product((-1.0, 1.0), repeat=n)))


def expected_power(norm: ConvexBody, xs: NDArray, q: float, rng: Optional[np.random.Generator] = None,
                   mc_trials: int = 100_000) -> tuple[float, bool]:
    """E ||sum eps_i x_i||^q; exact over all sign patterns when n <= 16."""
    n = len(xs)
    if n <= ENUM_CUTOFF:
        S = _signs(n) @ xs
        return float(np.mean(norm._gauge(S) ** q)), True
    rng = rng or np.random.default_rng(0)
    eps = rng.choice([-1.0, 1.0], (mc_trials, n))
    return float(np.mean(norm._gauge(eps @ xs) ** q)), False


@dataclass
class TypeReport:
    q: float
    cprime: float
    sequences: int
    violations: int
    max_ratio: float
    max_equality_error: float
    exact: bool
    seed: int

    @property
    def passed(self) -> bool:
        return self.violations == 0


def check_type_induction(norm: ConvexBody, q: float, cprime: float, sequences=200, seed: int = 0,
                         n_max: int = 12) -> TypeReport:
    """Check E ||sum eps_i x_i||^q <= (c'/q) sum ||x_i||^q.

    ``sequences`` is either a count of random Gaussian sequences with lengths in
    1..n_max or an explicit list of (n, dim) arrays.
    """
    if not 1 < q <= 2:
        raise RademacherError("q must lie in (1, 2]")
    rng = np.random.default_rng(seed)
    if isinstance(sequences, int):
        seqs = [rng.standard_normal((int(rng.integers(1, n_max + 1)), norm.dim)) for _ in range(sequences)]
    else:
        seqs = [np.atleast_2d(np.asarray(s, dtype=float)) for s in sequences]
    viol, worst, eq_err, exact = 0, 0.0, 0.0, True
    for xs in seqs:
        lhs, ex = expected_power(norm, xs, q, rng)
        exact &= ex
        rhs = cprime / q * float(np.sum(norm._gauge(xs) ** q))
        if lhs - rhs > 1e-9 * (1.0 + abs(rhs)):
            viol += 1
        worst = max(worst, lhs / rhs if rhs > 0 else (np.inf if lhs > 0 else 0.0))
        eq_err = max(eq_err, abs(lhs - rhs) / max(1.0, abs(rhs)))
    return TypeReport(q, cprime, len(seqs), viol, float(worst), float(eq_err), exact, seed)
