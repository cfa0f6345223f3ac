"""Randomized violation scans for inclusion and scaling inequalities on a body."""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from numpy.typing import NDArray

from . import geometry as geo
from .geometry import ConvexBody

log = logging.getLogger(__name__)

RTOL = 1e-9
DEFAULT_MARGIN = 0.1


class CertifyError(ValueError):
    pass


@dataclass
class ViolationReport:
    check: str
    body: dict
    params: dict
    samples: int
    violations: int
    max_deficit: float
    max_ratio: float
    seed: int
    margin: Optional[float] = None
    worst: Optional[dict] = None

    @property
    def passed(self) -> bool:
        return self.violations == 0

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in ("check", "body", "params", "samples", "violations",
                                               "max_deficit", "max_ratio", "seed", "margin", "worst")}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _report(check, body, params, lhs, rhs, seed, margin=None, points=None) -> ViolationReport:
    """Tally ``lhs >= rhs`` over samples; a deficit counts beyond 1e-9 (1 + |rhs|)."""
    deficit = rhs - lhs
    bad = deficit > RTOL * (1.0 + np.abs(rhs))
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(lhs > 0, rhs / lhs, np.where(rhs > 0, np.inf, 0.0))
    k = int(np.argmax(deficit)) if len(deficit) else 0
    worst = None
    if points is not None and len(deficit):
        worst = {name: np.asarray(a[k]).tolist() for name, a in points.items()}
    return ViolationReport(check, body.to_dict(), params, int(len(lhs)), int(bad.sum()),
                           float(np.max(deficit)) if len(deficit) else 0.0,
                           float(np.max(ratio)) if len(ratio) else 0.0, int(seed), margin, worst)


def _check_params(alpha, p):
    if alpha < 0:
        raise CertifyError("alpha must be nonnegative")
    if not p >= 2:
        raise CertifyError("p must be at least 2")


def check_midpoint_inclusion(body: ConvexBody, alpha: float, p: float, samples: int = 100_000,
                             seed: int = 0, margin: Optional[float] = None) -> ViolationReport:
    """Scan (x+y)/2 + alpha ||x-y||^p z in C for x, y in C and z on the unit sphere.

    Written as ``1 >= gauge(...)`` so the report's ratio is the gauge itself.
    """
    _check_params(alpha, p)
    a = alpha * (1.0 - margin) if margin else alpha
    rng = np.random.default_rng(seed)
    x = geo.sample_mixed(body, samples, rng)
    y = geo.sample_mixed(body, samples, rng)
    # half the pairs antipodal-ish boundary pairs, where the margin is thinnest
    rng.shuffle(y)
    z = geo.sample_boundary(body, samples, rng)
    w = 0.5 * (x + y) + a * body._gauge(x - y)[:, None] ** p * z
    g = body._gauge(w)
    return _report("midpoint_inclusion", body, {"alpha": a, "p": p}, np.ones(samples), g, seed, margin,
                   {"x": x, "y": y, "z": z})


def check_global_scaling(body: ConvexBody, alpha: float, p: float, samples: int = 100_000,
                         seed: int = 0, margin: Optional[float] = None) -> ViolationReport:
    """Scan <d, y - x> >= alpha ||d||_polar ||y - x||^p with y = lmo(d), x in C."""
    _check_params(alpha, p)
    a = alpha * (1.0 - margin) if margin else alpha
    rng = np.random.default_rng(seed)
    d = geo.sample_directions(body, samples, rng, normalize=False)
    x = geo.sample_mixed(body, samples, rng)
    y = body._lmo(d)
    lhs = np.einsum("ij,ij->i", d, y - x)
    rhs = a * body._support(d) * body._gauge(y - x) ** p
    return _report("global_scaling", body, {"alpha": a, "p": p}, lhs, rhs, seed, margin,
                   {"x": x, "d": d})


def _anchor(body, xstar, d, tol=1e-8):
    xstar = np.asarray(xstar, dtype=float)
    d = np.asarray(d, dtype=float)
    if abs(geo.gauge(body, xstar) - 1.0) > tol:
        raise CertifyError("x* must lie on the boundary")
    if abs(geo.support(body, d) - 1.0) > tol:
        raise CertifyError("d must lie on the polar unit sphere")
    if not geo.in_normal_cone(body, xstar, d, tol):
        raise CertifyError("d is not in the normal cone at x*")
    return xstar, d


def check_local_scaling(body: ConvexBody, xstar, d, alpha: float, p: float, samples: int = 100_000,
                        seed: int = 0, margin: Optional[float] = None) -> ViolationReport:
    """Scan <d, x* - x> >= alpha ||x* - x||^p over x in C.

    A third of the samples are boundary points in shrinking neighbourhoods of
    x*, where flat directions show up first.
    """
    _check_params(alpha, p)
    if not body.strictly_convex:
        log.warning("local scaling scan on a body that is not strictly convex")
    xstar, d = _anchor(body, xstar, d)
    a = alpha * (1.0 - margin) if margin else alpha
    rng = np.random.default_rng(seed)
    n_near = samples // 3
    far = geo.sample_mixed(body, samples - n_near, rng)
    scales = 10.0 ** rng.uniform(-4, 0, n_near)
    near = xstar + scales[:, None] * rng.standard_normal((n_near, body.dim))
    near = near / body._gauge(near)[:, None]
    x = np.concatenate([far, near])
    lhs = (xstar - x) @ d
    rhs = a * body._gauge(xstar - x) ** p
    return _report("local_scaling", body, {"alpha": a, "p": p, "xstar": xstar.tolist(), "d": d.tolist()},
                   lhs, rhs, seed, margin, {"x": x})


def _direction_pairs(body, pairs, rng):
    d1 = geo.sample_directions(body, pairs, rng, normalize=False)
    # mix of nearby and unrelated pairs, with random scales
    near = d1 + 10.0 ** rng.uniform(-4, 0, pairs)[:, None] * rng.standard_normal(d1.shape)
    far = geo.sample_directions(body, pairs, rng, normalize=False)
    pick = rng.random(pairs) < 0.5
    d2 = np.where(pick[:, None], near, far)
    s1 = np.exp(rng.uniform(-1, 1, pairs))[:, None]
    s2 = np.exp(rng.uniform(-1, 1, pairs))[:, None]
    return d1 * s1, d2 * s2


def check_lmo_holder(body: ConvexBody, alpha: float, p: float, pairs: int = 10_000,
                     seed: int = 0) -> ViolationReport:
    """Scan ||v1 - v2|| <= (||d1 - d2||_* / (2 alpha (||d1||_* + ||d2||_*)))^(1/(p-1)).

    ``alpha`` is the set modulus constant (delta(eps) >= alpha eps^p); norms
    are the body's gauge and its dual.
    """
    _check_params(alpha, p)
    if alpha == 0:
        raise CertifyError("alpha must be positive")
    rng = np.random.default_rng(seed)
    d1, d2 = _direction_pairs(body, pairs, rng)
    v1, v2 = body._lmo(d1), body._lmo(d2)
    lhs = body._gauge(v1 - v2)
    n1, n2 = body._support(d1), body._support(d2)
    rhs = (body._support(d1 - d2) / (2 * alpha * (n1 + n2))) ** (1.0 / (p - 1.0))
    # inequality is rhs >= lhs
    return _report("lmo_holder", body, {"alpha": alpha, "p": p}, rhs, lhs, seed, None,
                   {"d1": d1, "d2": d2})


def check_support_holder_sphere(body: ConvexBody, c: float, q: float, pairs: int = 10_000,
                                seed: int = 0) -> ViolationReport:
    """Scan ||grad sigma(d1) - grad sigma(d2)||_C <= c ||d1 - d2||_polar^(q-1) on the polar sphere."""
    if not body.strictly_convex:
        raise CertifyError("support not differentiable: body is not strictly convex")
    if not 1 < q <= 2:
        raise CertifyError("q must lie in (1, 2]")
    rng = np.random.default_rng(seed)
    d1, d2 = _direction_pairs(body, pairs, rng)
    d1 = d1 / body._support(d1)[:, None]
    d2 = d2 / body._support(d2)[:, None]
    lhs = body._gauge(body._lmo(d1) - body._lmo(d2))
    rhs = c * body._support(d1 - d2) ** (q - 1.0)
    return _report("support_holder_sphere", body, {"c": c, "q": q}, rhs, lhs, seed, None,
                   {"d1": d1, "d2": d2})
