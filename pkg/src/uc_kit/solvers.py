"""Frank-Wolfe variants, objectives with known constants, and convergence-rate fits."""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from numpy.typing import NDArray
from scipy.optimize import brentq

from . import geometry as geo
from .geometry import ConvexBody, Ellipsoid, LpBall, ScaledBody

log = logging.getLogger(__name__)

RULES = ("agnostic", "short_step", "line_search")
GAP_FLOOR = 1e-14
GOLDEN_ITERS = 64


class SolverError(ValueError):
    pass


class SolverAbort(RuntimeError):
    """Non-finite values during a run."""


# ------------------------------------------------------------------- objectives


@dataclass
class Objective:
    """Smooth convex objective; constants are w.r.t. the Euclidean norm."""

    value: Callable[[NDArray], float]
    gradient: Callable[[NDArray], NDArray]
    smoothness_L: float
    grad_lower_bound_c: Optional[float] = None
    optimum: Optional[tuple] = None
    name: str = "custom"
    quad_scale: Optional[float] = None  # set for scale/2 ||x - b||^2, enables closed-form line search
    spec: dict = field(default_factory=dict)

    @property
    def fstar(self) -> Optional[float]:
        return None if self.optimum is None else float(self.optimum[1])


def project(body: ConvexBody, b: NDArray) -> Optional[NDArray]:
    """Euclidean projection when it has a closed form (l2 balls, ellipsoids, their scalings)."""
    b = np.asarray(b, dtype=float)
    if body._gauge(b) <= 1.0:
        return b.copy()
    if isinstance(body, ScaledBody):
        inner = project(body.inner, b / body.scale)
        return None if inner is None else body.scale * inner
    if isinstance(body, LpBall) and body.p == 2.0:
        return body.r * b / np.linalg.norm(b)
    if isinstance(body, Ellipsoid):
        w, U = np.linalg.eigh(body.Q)
        c = U.T @ b

        def excess(mu):
            return float(np.sum(w * (c / (1.0 + mu * w)) ** 2)) - 1.0

        hi = 1.0
        while excess(hi) > 0:
            hi *= 2.0
        mu = brentq(excess, 0.0, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)
        x = U @ (c / (1.0 + mu * w))
        return x / body._gauge(x)
    return None


def _dist_lower_bound(body: ConvexBody, b: NDArray) -> float:
    """Euclidean distance from b to the body, exact when the projection is known."""
    x = project(body, b)
    if x is not None:
        return float(np.linalg.norm(b - x))
    return max(0.0, (float(body._gauge(b)) - 1.0) * body.inradius())


def check_gradient(value, gradient, dim: int, rng: np.random.Generator, probes: int = 10,
                   rtol: float = 1e-5, scale: float = 1.0) -> bool:
    for _ in range(probes):
        x = rng.uniform(-scale, scale, dim)
        g = np.asarray(gradient(x), dtype=float)
        h = 1e-6 * max(1.0, np.linalg.norm(x))
        fd = np.array([(value(x + h * e) - value(x - h * e)) / (2 * h) for e in np.eye(dim)])
        if not np.all(np.isfinite(g)) or np.linalg.norm(fd - g) > rtol * max(1.0, np.linalg.norm(g)):
            return False
    return True


def estimate_L(gradient, dim: int, rng: np.random.Generator, probes: int = 100, scale: float = 1.0,
               iters: int = 30, inflate: float = 1.2) -> float:
    """Power iteration on finite-difference Hessian-vector products at random probes."""
    best = 0.0
    for _ in range(probes):
        x = rng.uniform(-scale, scale, dim)
        v = rng.standard_normal(dim)
        v /= np.linalg.norm(v)
        h = 1e-5 * max(1.0, np.linalg.norm(x))
        lam = 0.0
        for _ in range(iters):
            hv = (np.asarray(gradient(x + h * v)) - np.asarray(gradient(x - h * v))) / (2 * h)
            lam = float(np.linalg.norm(hv))
            if lam == 0:
                break
            v = hv / lam
        best = max(best, lam)
    return inflate * best


def make_objective(spec: dict, body: Optional[ConvexBody] = None, seed: int = 0) -> Objective:
    """Build an objective from ``{"kind": "quadratic" | "distance_to_point" | "custom", ...}``.

    quadratic: scale/2 ||x - b||^2; distance_to_point: ||x - b|| (b outside the
    body); custom: ``value`` and ``gradient`` callables plus ``dim``.
    """
    kind = spec.get("kind", "quadratic")
    if kind in ("quadratic", "distance_to_point"):
        b = np.asarray(spec["b"], dtype=float)
        if body is not None and b.shape != (body.dim,):
            raise SolverError("b dimension mismatch")
        inside = body is not None and body._gauge(b) <= 1.0
        xs = project(body, b) if body is not None else None
        dist = _dist_lower_bound(body, b) if body is not None else None
        if kind == "quadratic":
            s = float(spec.get("scale", 1.0))
            if not s > 0:
                raise SolverError("scale must be positive")
            opt = None if xs is None else (xs, 0.5 * s * float(np.sum((xs - b) ** 2)))
            c = None if inside or not dist else s * dist
            return Objective(lambda x: 0.5 * s * float(np.dot(x - b, x - b)), lambda x: s * (x - b),
                             s, c, opt, f"quadratic(scale={s:g})", s, dict(spec, b=b.tolist()))
        if inside or body is None or not dist:
            raise SolverError("distance_to_point needs b outside the body")
        opt = None if xs is None else (xs, float(np.linalg.norm(xs - b)))

        def grad(x):
            r = x - b
            return r / np.linalg.norm(r)

        # Hessian norm of ||x - b|| is 1 / ||x - b|| <= 1 / dist on the body
        return Objective(lambda x: float(np.linalg.norm(x - b)), grad, 1.0 / dist, 1.0, opt,
                         "distance_to_point", None, dict(spec, b=b.tolist()))
    if kind == "custom":
        value, gradient, dim = spec["value"], spec["gradient"], int(spec["dim"])
        rng = np.random.default_rng(seed)
        if not check_gradient(value, gradient, dim, rng):
            raise SolverError("custom gradient does not match finite differences")
        L = spec.get("L") or estimate_L(gradient, dim, rng)
        return Objective(value, gradient, float(L), spec.get("c"), spec.get("optimum"), "custom")
    raise SolverError(f"unknown objective kind {kind!r}")


# -------------------------------------------------------------------- traces


@dataclass
class SolverTrace:
    k: NDArray
    f_value: NDArray
    fw_gap: NDArray
    step_size: NDArray
    snapshots: dict
    meta: dict

    def __len__(self):
        return len(self.k)

    @property
    def final(self) -> NDArray:
        return self.snapshots[max(self.snapshots)]

    def rows(self):
        for i in range(len(self.k)):
            yield {"k": int(self.k[i]), "f_value": self.f_value[i], "fw_gap": self.fw_gap[i],
                   "step_size": self.step_size[i]}


def _finite(name, *vals):
    for v in vals:
        if not np.all(np.isfinite(v)):
            raise SolverAbort(f"non-finite {name} encountered")


def _x0(body: ConvexBody, seed: int) -> NDArray:
    rng = np.random.default_rng(seed)
    return body._lmo(rng.standard_normal(body.dim))


def _line_search(obj: Objective, x, dvec, g) -> float:
    dd = float(dvec @ dvec)
    if dd == 0:
        return 0.0
    if obj.quad_scale is not None:
        return float(np.clip(-float(g @ dvec) / (obj.quad_scale * dd), 0.0, 1.0))
    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = 0.0, 1.0
    c1, c2 = b - invphi * (b - a), a + invphi * (b - a)
    f1, f2 = obj.value(x + c1 * dvec), obj.value(x + c2 * dvec)
    for _ in range(GOLDEN_ITERS):
        if f1 <= f2:
            b, c2, f2 = c2, c1, f1
            c1 = b - invphi * (b - a)
            f1 = obj.value(x + c1 * dvec)
        else:
            a, c1, f1 = c1, c2, f2
            c2 = a + invphi * (b - a)
            f2 = obj.value(x + c2 * dvec)
    # never accept a step worse than the endpoints
    cands = [(obj.value(x), 0.0), (obj.value(x + dvec), 1.0), (min(f1, f2), c1 if f1 <= f2 else c2)]
    return min(cands)[1]


def vanilla_fw(obj: Objective, body: ConvexBody, rule: str = "line_search", max_iter: int = 1000,
               tol_gap: float = 0.0, seed: int = 0, snapshot_every: int = 0,
               x0: Optional[NDArray] = None) -> SolverTrace:
    """Conditional gradients x_{k+1} = x_k + gamma_k (v_k - x_k), v_k = lmo(-grad f(x_k))."""
    if rule not in RULES:
        raise SolverError(f"unknown step rule {rule!r}")
    if max_iter < 0:
        raise SolverError("max_iter must be nonnegative")
    t0 = time.perf_counter()
    x = _x0(body, seed) if x0 is None else np.asarray(x0, dtype=float).copy()
    K = max_iter + 1
    fv, gaps, steps = np.full(K, np.nan), np.full(K, np.nan), np.full(K, np.nan)
    snaps = {0: x.copy()}
    n = 0
    for k in range(K):
        g = np.asarray(obj.gradient(x), dtype=float)
        f = obj.value(x)
        _finite("gradient/value", g, f)
        v = body._lmo(-g)
        dvec = v - x
        gap = float(-(g @ dvec))
        fv[k], gaps[k] = f, gap
        n = k + 1
        if snapshot_every and k % snapshot_every == 0:
            snaps[k] = x.copy()
        if k == max_iter or gap <= tol_gap:
            break
        if rule == "agnostic":
            gamma = 2.0 / (k + 2.0)
        elif rule == "short_step":
            dd = float(dvec @ dvec)
            gamma = 0.0 if dd == 0 else min(max(gap / (obj.smoothness_L * dd), 0.0), 1.0)
        else:
            gamma = _line_search(obj, x, dvec, g)
        steps[k] = gamma
        x = x + gamma * dvec
    snaps[n - 1] = x.copy()
    meta = {"solver": "vanilla_fw", "rule": rule, "body": body.to_dict(), "objective": obj.name,
            "seed": seed, "max_iter": max_iter, "tol_gap": tol_gap,
            "wall_time": time.perf_counter() - t0, "iterations": n - 1}
    return SolverTrace(np.arange(n), fv[:n], gaps[:n], steps[:n], snaps, meta)


def pafw(obj: Objective, body: ConvexBody, max_iter: int = 1000, tol_gap: float = 0.0, seed: int = 0,
         snapshot_every: int = 0, x0: Optional[NDArray] = None) -> SolverTrace:
    """Primal averaging FW with weights 2/(k+2); records f and the FW gap at the averages y_k."""
    if max_iter < 0:
        raise SolverError("max_iter must be nonnegative")
    t0 = time.perf_counter()
    x = _x0(body, seed) if x0 is None else np.asarray(x0, dtype=float).copy()
    y = x.copy()
    K = max_iter + 1
    fv, gaps, steps = np.full(K, np.nan), np.full(K, np.nan), np.full(K, np.nan)
    snaps = {0: y.copy()}
    z_hist = []
    n = 0
    for k in range(K):
        if k > 0:
            z = (k - 1.0) / (k + 1.0) * y + 2.0 / (k + 1.0) * x
            gz = np.asarray(obj.gradient(z), dtype=float)
            _finite("gradient", gz)
            x = body._lmo(-gz)
            a = 2.0 / (k + 2.0)
            y = (1.0 - a) * y + a * x
            steps[k] = a
            if k <= 2:
                z_hist.append(z.copy())
        gy = np.asarray(obj.gradient(y), dtype=float)
        f = obj.value(y)
        _finite("gradient/value", gy, f)
        gap = float(gy @ (y - body._lmo(-gy)))
        fv[k], gaps[k] = f, gap
        n = k + 1
        if snapshot_every and k % snapshot_every == 0:
            snaps[k] = y.copy()
        if gap <= tol_gap:
            break
    snaps[n - 1] = y.copy()
    meta = {"solver": "pafw", "rule": "agnostic", "body": body.to_dict(), "objective": obj.name,
            "seed": seed, "max_iter": max_iter, "tol_gap": tol_gap,
            "wall_time": time.perf_counter() - t0, "iterations": n - 1}
    tr = SolverTrace(np.arange(n), fv[:n], gaps[:n], steps[:n], snaps, meta)
    tr.meta["z_first"] = [z.tolist() for z in z_hist]
    return tr


def pafw_envelope(k, p: float, L: float, D: float, alpha: float, c: float):
    """Upper envelope on f(y_k) - f* for the averaged iterates, with the stated constants."""
    if not p >= 2:
        raise SolverError("p must be at least 2")
    if min(L, D, alpha, c) <= 0:
        raise SolverError("constants must be positive")
    k = np.asarray(k, dtype=float)
    factor = 2.0 * L * (6.0 * L * D / (4.0 * alpha * c)) ** (1.0 / (p - 1.0))
    if p > 3:
        shape = k ** (-(p + 1.0) / (p - 1.0))
    elif p == 3:
        shape = np.log(k + 1.0) / k ** 2
    else:
        shape = (3.0 - p) / (p - 1.0) / k ** 2
    return factor * shape


def envelope_exponent(p: float) -> float:
    """Predicted power-law exponent of the envelope (log factor ignored at p = 3)."""
    return -(p + 1.0) / (p - 1.0) if p > 3 else -2.0


def reference_fstar(obj: Objective, body: ConvexBody, max_iter: int, seed: int = 0) -> float:
    """Closed-form f* when known, else the best value of a 10x longer line-search run."""
    if obj.fstar is not None:
        return obj.fstar
    tr = vanilla_fw(obj, body, "line_search", 10 * max_iter, tol_gap=0.0, seed=seed)
    return float(np.min(tr.f_value))


# ------------------------------------------------------------------ rate fits


@dataclass(frozen=True)
class RateEstimate:
    model: str
    exponent_or_ratio: float
    constant: float
    r_squared: float
    fit_window: tuple
    n_points: int = 0
    alternatives: dict = field(default_factory=dict)


def _linfit(x, y):
    A = np.vstack([np.ones_like(x), x]).T
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    res = y - A @ coef
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(res @ res) / ss_tot if ss_tot > 0 else 1.0
    return float(coef[0]), float(coef[1]), r2


def fit_gaps(k, gaps, window: Optional[tuple] = None, burn_in_fraction: float = 0.1,
             models=("geometric", "power_law"), min_points: int = 50) -> RateEstimate:
    """Fit log(gap) against k (geometric) or log k (power law); keep the best r^2."""
    k = np.asarray(k, dtype=float)
    gaps = np.asarray(gaps, dtype=float)
    if window is None:
        lo = max(1.0, burn_in_fraction * k.max())
        window = (lo, k.max())
    sel = (k >= window[0]) & (k <= window[1]) & (k >= 1)
    ok = sel & (gaps > GAP_FLOOR)
    if ok.sum() < min_points:
        return RateEstimate("converged_exactly", float("nan"), float("nan"), float("nan"),
                            tuple(window), int(ok.sum()))
    kk, lg = k[ok], np.log(gaps[ok])
    fits = {}
    if "geometric" in models:
        a, s, r2 = _linfit(kk, lg)
        fits["geometric"] = (float(np.exp(s)), float(np.exp(a)), r2)
    if "power_law" in models:
        a, s, r2 = _linfit(np.log(kk), lg)
        fits["power_law"] = (s, float(np.exp(a)), r2)
    if "power_law_log" in models:
        a, s, r2 = _linfit(np.log(kk), lg - np.log(np.log(kk + 1.0)))
        fits["power_law_log"] = (s, float(np.exp(a)), r2)
    best = max(fits, key=lambda m: fits[m][2])
    e, c, r2 = fits[best]
    return RateEstimate(best, e, c, r2, tuple(window), int(ok.sum()),
                        {m: {"value": v[0], "r_squared": v[2]} for m, v in fits.items()})


def fit_rate(trace: SolverTrace, fstar: float, burn_in_fraction: float = 0.1,
             window: Optional[tuple] = None, models=("geometric", "power_law")) -> RateEstimate:
    return fit_gaps(trace.k, trace.f_value - fstar, window, burn_in_fraction, models)


def lp_diameter(body: ConvexBody) -> float:
    """Euclidean diameter of a centrally symmetric body: twice the largest support over unit vectors."""
    if isinstance(body, LpBall):
        if body.p is geo.INF or body.p >= 2:
            return 2.0 * body.r * body.dim ** (0.5 - (0.0 if body.p is geo.INF else 1.0 / body.p))
        return 2.0 * body.r
    if isinstance(body, Ellipsoid):
        return 2.0 / np.sqrt(np.linalg.eigvalsh(body.Q)[0])
    if isinstance(body, ScaledBody):
        return body.scale * lp_diameter(body.inner)
    raise SolverError("diameter not available")


def outward_normal(body: ConvexBody, x: NDArray) -> NDArray:
    """Unit Euclidean outer normal at a smooth boundary point."""
    x = np.asarray(x, dtype=float)
    if isinstance(body, ScaledBody):
        return outward_normal(body.inner, x / body.scale)
    if isinstance(body, LpBall) and body.p is not geo.INF and body.p > 1:
        n = np.sign(x) * np.abs(x) ** (body.p - 1.0)
    elif isinstance(body, Ellipsoid):
        n = body.Q @ x
    else:
        raise SolverError("normal not available for this body")
    return n / np.linalg.norm(n)


def quadratic_with_optimum(body: ConvexBody, xstar, grad_norm: float, scale: float = 1.0) -> Objective:
    """scale/2 ||x - b||^2 with b = x* + grad_norm/scale * normal(x*).

    The projection of b is x*, so the optimum and the gradient norm there are
    known exactly; c is the distance from b to the body times the scale.
    """
    xstar = np.asarray(xstar, dtype=float)
    if abs(float(body._gauge(xstar)) - 1.0) > 1e-12:
        raise SolverError("x* must lie on the boundary")
    if not grad_norm > 0:
        raise SolverError("grad_norm must be positive")
    b = xstar + grad_norm / scale * outward_normal(body, xstar)
    obj = make_objective({"kind": "quadratic", "b": b, "scale": scale}, body)
    obj.optimum = (xstar.copy(), 0.5 * grad_norm ** 2 / scale)
    obj.grad_lower_bound_c = grad_norm
    return obj
