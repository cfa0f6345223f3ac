"""Numerical estimators for the moduli of convexity, smoothness and rotundity.

All four moduli are extremal problems over pairs of boundary points (or one
boundary point and an anchor). They are estimated by the same derivative-free
scheme: many random restarts, then coordinate-wise golden-section refinement of
the best few candidates. Boundary points are parametrized radially,
``x = u / gauge(u)``, which covers the whole sphere of any body, flat faces included.

Distance constraints ``||x - y||_C >= eps`` are handled without penalties: the
second point is moved along a planar arc starting at ``x`` and ending at ``-x``,
and bisection on the arc parameter places it at gauge distance exactly ``eps``.

Infima are estimated from above and suprema from below; every curve carries its
bias direction so the duality checks can reason one-sidedly.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, asdict
from typing import Callable, Optional

import numpy as np
from numpy.typing import NDArray

from . import geometry as geo
from .geometry import ConvexBody

log = logging.getLogger(__name__)

KINDS = ("delta", "rho", "rho_local", "nu_local")
_KIND_ID = {k: i for i, k in enumerate(KINDS)}
FLOOR = 1e-9

CONVEX_ITEMS = {"1a", "1b", "1c", "1f", "2a", "2b", "2e"}
SMOOTH_ITEMS = {"1e", "2d"}
HOLDER_ITEMS = {"1d", "2c"}


class ModuliError(ValueError):
    pass


@dataclass(frozen=True)
class Budget:
    """Search effort: random restarts, refinement rounds and inner iteration counts."""

    restarts: int = 2000
    rounds: int = 40
    refine_top: int = 8
    golden_iters: int = 16
    bisect_iters: int = 44
    step0: float = 0.5
    shrink: float = 0.85

    def label(self) -> str:
        return f"N={self.restarts};K={self.rounds}"


@dataclass(frozen=True)
class UCParams:
    """A certified pair (alpha, exponent) for one characterization.

    ``item`` is a tag like ``"1c"`` (global theorem, item c) or ``"2b"`` (local
    theorem, item b). Convexity items store p >= 2, smoothness items store
    q in (1, 2] and Hölder items store the Hölder exponent q - 1 in (0, 1].
    """

    alpha: float
    exponent: float
    item: str = "1c"

    def __post_init__(self):
        if not self.alpha > 0:
            raise ModuliError(f"alpha must be positive, got {self.alpha}")
        kind = self.kind
        e = self.exponent
        if kind == "convex" and not e >= 2:
            raise ModuliError(f"item {self.item} needs p >= 2, got {e}")
        if kind == "smooth" and not 1 < e <= 2:
            raise ModuliError(f"item {self.item} needs q in (1, 2], got {e}")
        if kind == "holder" and not 0 < e <= 1:
            raise ModuliError(f"item {self.item} needs a Hölder exponent in (0, 1], got {e}")

    @property
    def kind(self) -> str:
        if self.item in CONVEX_ITEMS:
            return "convex"
        if self.item in SMOOTH_ITEMS:
            return "smooth"
        if self.item in HOLDER_ITEMS:
            return "holder"
        raise ModuliError(f"unknown item tag {self.item!r}")

    @property
    def p(self) -> float:
        """The convexity exponent p underlying this certificate."""
        if self.kind == "convex":
            return self.exponent
        if self.kind == "smooth":
            return self.exponent / (self.exponent - 1.0)
        return 1.0 + 1.0 / self.exponent

    @property
    def q(self) -> float:
        return self.p / (self.p - 1.0)


@dataclass(frozen=True)
class NotUC:
    reason: str

    def __bool__(self):
        return False


@dataclass
class ModulusCurve:
    kind: str
    grid: NDArray
    values: NDArray
    bias: str
    budget: Budget
    seed: int
    anchor: Optional[tuple] = None
    raw_violations: int = 0
    raw_values: Optional[NDArray] = field(default=None, repr=False)

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.kind not in KINDS:
            raise ModuliError(f"unknown curve kind {self.kind!r}")
        if len(self.grid) != len(self.values):
            raise ModuliError("grid and values differ in length")
        if np.any(np.diff(self.grid) <= 0):
            raise ModuliError("grid must be strictly increasing")

    def rows(self):
        for g, v in zip(self.grid, self.values):
            yield {"kind": self.kind, "grid": g, "value": v, "bias": self.bias,
                   "seed": self.seed, "budget": self.budget.label()}


def default_eps_grid(n: int = 50) -> NDArray:
    return np.linspace(0.05, 2.0, n)


def default_tau_grid(n: int = 20) -> NDArray:
    return np.geomspace(0.01, 1.0, n)


# ------------------------------------------------------------------- search engine


def _rng(seed: int, kind: str, value: float) -> np.random.Generator:
    bits = int(np.float64(value).view(np.uint64))
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(_KIND_ID[kind], bits)))


def _normalize_blocks(P: NDArray, m: int) -> NDArray:
    B = P.reshape(P.shape[0], -1, m)
    n = np.linalg.norm(B, axis=-1, keepdims=True)
    return (B / np.where(n > 0, n, 1.0)).reshape(P.shape)


def _search(objective: Callable[[NDArray, NDArray], NDArray], n_params: int, m: int,
            grid: NDArray, kind: str, budget: Budget, seed: int, maximize: bool) -> NDArray:
    """Best objective value per grid entry (restarts + golden-section refinement).

    ``objective(params, ctx)`` is vectorized over rows; ``ctx`` carries the grid
    value of each row. Parameters are grouped into blocks of size ``m`` that the
    objective treats as scale-free directions.
    """
    sgn = -1.0 if maximize else 1.0
    G = len(grid)
    N = budget.restarts
    R = min(budget.refine_top, N)
    # restarts, one independent stream per grid value
    P0 = np.stack([_rng(seed, kind, g).standard_normal((N, n_params)) for g in grid])
    P0 = _normalize_blocks(P0.reshape(G * N, n_params), m)
    ctx0 = np.repeat(grid, N)
    vals = sgn * objective(P0, ctx0)
    vals = np.where(np.isfinite(vals), vals, np.inf).reshape(G, N)
    order = np.argsort(vals, axis=1, kind="stable")[:, :R]
    P = P0.reshape(G, N, n_params)[np.arange(G)[:, None], order].reshape(G * R, n_params)
    best = np.take_along_axis(vals, order, axis=1).reshape(G * R)
    ctx = np.repeat(grid, R)

    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    h = budget.step0
    for _ in range(budget.rounds):
        P = _normalize_blocks(P, m)
        for c in range(n_params):
            base = P[:, c].copy()

            def f(t):
                Q = P.copy()
                Q[:, c] = base + t
                out = sgn * objective(Q, ctx)
                return np.where(np.isfinite(out), out, np.inf)

            a = np.full(len(P), -h)
            b = np.full(len(P), h)
            x1 = b - invphi * (b - a)
            x2 = a + invphi * (b - a)
            f1, f2 = f(x1), f(x2)
            for _ in range(budget.golden_iters):
                left = f1 <= f2
                b = np.where(left, x2, b)
                a = np.where(left, a, x1)
                nx1 = b - invphi * (b - a)
                nx2 = a + invphi * (b - a)
                # reuse one interior evaluation per row
                x2n = np.where(left, x1, nx2)
                x1n = np.where(left, nx1, x2)
                f2n = np.where(left, f1, np.nan)
                f1n = np.where(left, np.nan, f2)
                need = np.where(left, x1n, x2n)
                fn = f(need)
                f1 = np.where(left, fn, f1n)
                f2 = np.where(left, f2n, fn)
                x1, x2 = x1n, x2n
            t = np.where(f1 <= f2, x1, x2)
            ft = np.minimum(f1, f2)
            better = ft < best
            P[:, c] = np.where(better, base + t, base)
            best = np.where(better, ft, best)
        h *= budget.shrink
    best = best.reshape(G, R).min(axis=1)
    return sgn * best


def _arc_point(body: ConvexBody, x: NDArray, w: NDArray, eps: NDArray, iters: int) -> NDArray:
    """Boundary point at gauge distance ``eps`` from boundary point ``x``.

    Walks the arc theta -> normalize(cos(theta) x + sin(theta) w_perp) from x
    (distance 0) to -x (distance 2) and bisects on theta.
    """
    wp = w - (np.einsum("ij,ij->i", w, x) / np.einsum("ij,ij->i", x, x))[:, None] * x
    nw = np.linalg.norm(wp, axis=1, keepdims=True)
    # a degenerate w (parallel to x) gets a fixed fallback direction
    fallback = np.roll(x, 1, axis=1) * np.array([-1.0] + [0.0] * (x.shape[1] - 1))
    wp = np.where(nw > 1e-12, wp, fallback)
    if x.shape[1] == 1:
        return -x
    wp = wp / np.linalg.norm(wp, axis=1, keepdims=True) * np.linalg.norm(x, axis=1, keepdims=True)
    lo = np.zeros(len(x))
    hi = np.full(len(x), np.pi)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        y = np.cos(mid)[:, None] * x + np.sin(mid)[:, None] * wp
        y = y / body._gauge(y)[:, None]
        too_far = body._gauge(x - y) >= eps
        hi = np.where(too_far, mid, hi)
        lo = np.where(too_far, lo, mid)
    y = np.cos(hi)[:, None] * x + np.sin(hi)[:, None] * wp
    return y / body._gauge(y)[:, None]


def _radial(body: ConvexBody, U: NDArray) -> NDArray:
    return U / body._gauge(U)[:, None]


# --------------------------------------------------------------------- estimators


def _check_eps(eps):
    eps = np.atleast_1d(np.asarray(eps, dtype=float))
    if np.any(eps < 0) or np.any(eps > 2):
        raise ModuliError("eps must lie in [0, 2]")
    return eps


def _monotone(kind: str, values: NDArray) -> tuple[NDArray, int]:
    if kind in ("delta", "nu_local"):
        # an admissible pair at distance eps' is admissible for every eps <= eps'
        smooth = np.minimum.accumulate(values[::-1])[::-1]
    else:
        # rho is nondecreasing, so a lower bound at tau' bounds every tau >= tau'
        smooth = np.maximum.accumulate(values)
    n = int(np.sum(smooth != values))
    if n:
        log.info("%s: %d raw monotonicity violations smoothed", kind, n)
    return smooth, n


def delta_curve(body: ConvexBody, eps_grid=None, budget: Budget = Budget(), seed: int = 0) -> ModulusCurve:
    """Modulus of convexity 1 - ||(x+y)/2|| over boundary pairs with ||x-y|| >= eps."""
    eps = _check_eps(default_eps_grid() if eps_grid is None else eps_grid)
    m = body.dim
    pos = eps > 0
    vals = np.zeros(len(eps))
    if np.any(pos):
        def obj(P, e):
            x = _radial(body, P[:, :m])
            y = _arc_point(body, x, P[:, m:], e, budget.bisect_iters)
            return 1.0 - body._gauge(0.5 * (x + y))

        vals[pos] = _search(obj, 2 * m, m, eps[pos], "delta", budget, seed, maximize=False)
    raw = np.maximum(vals, 0.0)
    smooth, nviol = _monotone("delta", raw)
    return ModulusCurve("delta", eps, smooth, "upper", budget, seed, None, nviol, raw)


def estimate_delta(body: ConvexBody, eps: float, budget: Budget = Budget(), seed: int = 0) -> float:
    if not 0 <= eps <= 2:
        raise ModuliError("eps must lie in [0, 2]")
    return float(delta_curve(body, [eps], budget, seed).values[0])


def rho_curve(body: ConvexBody, tau_grid=None, budget: Budget = Budget(), seed: int = 0) -> ModulusCurve:
    """Modulus of smoothness (||x + tau y|| + ||x - tau y||)/2 - 1 over unit pairs."""
    tau = np.atleast_1d(np.asarray(default_tau_grid() if tau_grid is None else tau_grid, dtype=float))
    if np.any(tau <= 0):
        raise ModuliError("tau must be positive")
    m = body.dim

    def obj(P, t):
        x = _radial(body, P[:, :m])
        y = _radial(body, P[:, m:]) * t[:, None]
        return 0.5 * (body._gauge(x + y) + body._gauge(x - y)) - 1.0

    vals = _search(obj, 2 * m, m, tau, "rho", budget, seed, maximize=True)
    raw = np.clip(vals, 0.0, tau)
    smooth, nviol = _monotone("rho", raw)
    return ModulusCurve("rho", tau, smooth, "lower", budget, seed, None, nviol, raw)


def estimate_rho(body: ConvexBody, tau: float, budget: Budget = Budget(), seed: int = 0) -> float:
    if not tau > 0:
        raise ModuliError("tau must be positive")
    return float(rho_curve(body, [tau], budget, seed).values[0])


def _check_anchor(body: ConvexBody, xstar, d, tol: float = 1e-8):
    xstar = np.asarray(xstar, dtype=float)
    d = np.asarray(d, dtype=float)
    if xstar.shape != (body.dim,) or d.shape != (body.dim,):
        raise ModuliError("anchor dimension mismatch")
    if abs(geo.gauge(body, xstar) - 1.0) > tol:
        raise ModuliError("anchor x* must lie on the boundary (gauge 1)")
    if abs(geo.support(body, d) - 1.0) > tol:
        raise ModuliError("anchor direction d must lie on the polar unit sphere (support 1)")
    if not geo.in_normal_cone(body, xstar, d, tol):
        raise ModuliError("anchor direction d is not in the normal cone at x*")
    return xstar, d


def rho_local_curve(body: ConvexBody, t_grid, xstar, d, budget: Budget = Budget(), seed: int = 0) -> ModulusCurve:
    """Local modulus of smoothness ||x* + t x|| - ||x*|| - t<d, x> over gauge(x) <= 1."""
    xstar, d = _check_anchor(body, xstar, d)
    t = np.atleast_1d(np.asarray(t_grid, dtype=float))
    if np.any(t <= 0):
        raise ModuliError("t must be positive")
    m = body.dim
    g0 = geo.gauge(body, xstar)

    def obj(P, tt):
        # convex in x, so the supremum over the ball is attained on the sphere
        x = _radial(body, P)
        return body._gauge(xstar + tt[:, None] * x) - g0 - tt * (x @ d)

    vals = _search(obj, m, m, t, "rho_local", budget, seed, maximize=True)
    raw = np.maximum(vals, 0.0)
    smooth, nviol = _monotone("rho_local", raw)
    return ModulusCurve("rho_local", t, smooth, "lower", budget, seed, (xstar, d), nviol, raw)


def estimate_local_rho(body: ConvexBody, t: float, xstar, d, budget: Budget = Budget(), seed: int = 0) -> float:
    if not t > 0:
        raise ModuliError("t must be positive")
    return float(rho_local_curve(body, [t], xstar, d, budget, seed).values[0])


def nu_curve(body: ConvexBody, eps_grid, xstar, d, budget: Budget = Budget(), seed: int = 0) -> ModulusCurve:
    """Local modulus of rotundity inf <d, x* - x> over x in C with ||x* - x|| >= eps.

    The infimum of a linear function over C minus a gauge ball around x* sits on
    the boundary of C at distance exactly eps, so the search walks boundary arcs
    leaving x*.
    """
    xstar, d = _check_anchor(body, xstar, d)
    eps = _check_eps(eps_grid)
    m = body.dim
    pos = eps > 0
    vals = np.zeros(len(eps))
    if np.any(pos):
        def obj(P, e):
            x0 = np.broadcast_to(xstar, P.shape)
            y = _arc_point(body, np.ascontiguousarray(x0), P, e, budget.bisect_iters)
            return (xstar - y) @ d

        vals[pos] = _search(obj, m, m, eps[pos], "nu_local", budget, seed, maximize=False)
    raw = np.maximum(vals, 0.0)
    smooth, nviol = _monotone("nu_local", raw)
    return ModulusCurve("nu_local", eps, smooth, "upper", budget, seed, (xstar, d), nviol, raw)


def estimate_nu(body: ConvexBody, eps: float, xstar, d, budget: Budget = Budget(), seed: int = 0) -> float:
    if not 0 <= eps <= 2:
        raise ModuliError("eps must lie in [0, 2]")
    return float(nu_curve(body, [eps], xstar, d, budget, seed).values[0])


# ------------------------------------------------------------ Lindenstrauss checks


@dataclass
class DualityReport:
    check: str
    grid: NDArray
    lhs: NDArray
    rhs: NDArray
    tol: float
    lhs_bias: str = "lower"
    rhs_bias: str = "lower"

    @property
    def discrepancy(self) -> NDArray:
        return np.abs(self.lhs - self.rhs)

    @property
    def max_discrepancy(self) -> float:
        return float(self.discrepancy.max()) if len(self.grid) else 0.0

    @property
    def passed(self) -> bool:
        return self.max_discrepancy <= self.tol

    def to_dict(self) -> dict:
        return {"check": self.check, "grid": self.grid.tolist(), "lhs": self.lhs.tolist(),
                "rhs": self.rhs.tolist(), "tol": self.tol, "lhs_bias": self.lhs_bias,
                "rhs_bias": self.rhs_bias, "max_discrepancy": self.max_discrepancy,
                "passed": self.passed}


def _legendre_sup(grid_lin: NDArray, slope_scale: float, eps: NDArray, mod: NDArray) -> NDArray:
    # sup over eps in the grid of (slope_scale * t * eps - mod(eps)); eps = 0 always admissible
    vals = slope_scale * grid_lin[:, None] * eps[None, :] - mod[None, :]
    return np.maximum(vals.max(axis=1), 0.0)


def check_lindenstrauss_global(body: ConvexBody, tau_grid=None, eps_grid=None,
                               budget: Budget = Budget(), seed: int = 0, tol: float = 1e-2) -> DualityReport:
    """Compare rho of the polar body with sup_eps {tau eps / 2 - delta_C(eps)}.

    Both sides are lower-biased estimates of the same quantity (the right side
    subtracts an upper-biased delta), so their gap bounds the estimation error.
    """
    tau = np.asarray(default_tau_grid() if tau_grid is None else tau_grid, dtype=float)
    eps = np.asarray(default_eps_grid() if eps_grid is None else eps_grid, dtype=float)
    if tau.size == 0 or eps.size == 0:
        raise ModuliError("grids must be nonempty")
    lhs = rho_curve(body.polar(), tau, budget, seed).values
    dc = delta_curve(body, eps, budget, seed)
    rhs = _legendre_sup(tau, 0.5, dc.grid, dc.values)
    return DualityReport("lindenstrauss_global", tau, lhs, rhs, tol)


def check_lindenstrauss_local(body: ConvexBody, t_grid, eps_grid, xstar, d,
                              budget: Budget = Budget(), seed: int = 0, tol: float = 1e-2) -> DualityReport:
    """Compare the local smoothness of the polar at d (direction x*) with
    sup_eps {eps t - nu_C(eps, x*, d)}."""
    t = np.asarray(t_grid, dtype=float)
    eps = np.asarray(eps_grid, dtype=float)
    if t.size == 0 or eps.size == 0:
        raise ModuliError("grids must be nonempty")
    lhs = rho_local_curve(body.polar(), t, d, xstar, budget, seed).values
    nc = nu_curve(body, eps, xstar, d, budget, seed)
    rhs = _legendre_sup(t, 1.0, nc.grid, nc.values)
    return DualityReport("lindenstrauss_local", t, lhs, rhs, tol)


# ---------------------------------------------------------------------- fitting


def fit_uc_params(curve: ModulusCurve, floor: float = FLOOR, item: Optional[str] = None,
                  exponent: Optional[float] = None):
    """Power-law lower bound alpha * eps**p <= curve on its grid.

    Least squares on log(value) vs log(eps) gives the exponent (unless
    ``exponent`` pins it); alpha is then shrunk until the bound holds at every
    grid point. Returns ``NotUC`` when the curve vanishes (below ``floor``)
    somewhere with eps >= 0.1.
    """
    if curve.kind not in ("delta", "nu_local"):
        raise ModuliError("fit_uc_params needs a delta or nu_local curve")
    mask = curve.grid > 0
    g, v = curve.grid[mask], curve.values[mask]
    if len(g) < 3:
        raise ModuliError("need at least 3 positive grid points to fit")
    flat = (g >= 0.1) & (v <= floor)
    if np.any(flat):
        return NotUC(f"modulus below {floor:g} at eps = {g[flat][0]:.3g}")
    ok = v > floor
    if ok.sum() < 3:
        return NotUC("fewer than 3 grid points above the floor")
    g, v = g[ok], v[ok]
    if exponent is None:
        slope, intercept = np.polyfit(np.log(g), np.log(v), 1)
        p_hat = float(max(slope, 2.0))
        alpha = min(float(np.exp(intercept)), float(np.min(v / g ** p_hat)))
    else:
        p_hat = float(exponent)
        alpha = float(np.min(v / g ** p_hat))
    if item is None:
        item = "1c" if curve.kind == "delta" else "2a"
    return UCParams(alpha, p_hat, item)


def analytic_l2_delta(eps):
    eps = np.asarray(eps, dtype=float)
    return 1.0 - np.sqrt(1.0 - eps ** 2 / 4.0)


def analytic_l2_rho(tau):
    tau = np.asarray(tau, dtype=float)
    return np.sqrt(1.0 + tau ** 2) - 1.0
