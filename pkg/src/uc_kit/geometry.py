"""Convex-body oracles: gauge, support function, linear maximization, normal cones.

Bodies are immutable descriptions of centrally symmetric compact convex sets with
nonempty interior. Three kinds are supported: ``LpBall`` (including p = 1 and
p = INF), ``Ellipsoid`` ({x : x^T Q x <= 1}) and ``ScaledBody`` (a positive
multiple of another body). Every body knows its polar, so the support function
of a body is the gauge of its polar.
"""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from typing import Union

import numpy as np
from numpy.typing import NDArray

Vector = NDArray[np.float64]

DEFAULT_TOL = 1e-8
_UNDERFLOW = 1e-300


class GeometryError(ValueError):
    """Raised on invalid bodies, mismatched dimensions or degenerate directions."""


class Exponent(enum.Enum):
    INF = "inf"

    def __repr__(self) -> str:
        return "INF"


INF = Exponent.INF
PExp = Union[float, Exponent]


def conjugate_exponent(p: PExp) -> PExp:
    """Hölder conjugate p* with 1/p + 1/p* = 1 (1 <-> INF)."""
    if p is INF:
        return 1.0
    p = float(p)
    if p == 1.0:
        return INF
    return p / (p - 1.0)


def lp_norm(x: NDArray, p: PExp, axis: int = -1) -> NDArray:
    """p-norm along ``axis``; rescales by the max-abs entry to avoid overflow."""
    x = np.asarray(x, dtype=float)
    a = np.abs(x)
    if p is INF:
        return a.max(axis=axis)
    p = float(p)
    if p == 1.0:
        return a.sum(axis=axis)
    if p == 2.0:
        return np.sqrt((a * a).sum(axis=axis))
    s = a.max(axis=axis, keepdims=True)
    safe = np.where(s > 0, s, 1.0)
    r = ((a / safe) ** p).sum(axis=axis) ** (1.0 / p)
    return r * np.squeeze(s, axis=axis)


# --------------------------------------------------------------------------- bodies


@dataclass(frozen=True)
class LpBall:
    p: PExp
    r: float = 1.0
    dim: int = 2
    kind: str = field(default="lp", init=False)

    def __post_init__(self):
        if self.p is not INF:
            if isinstance(self.p, str):
                raise GeometryError("use geometry.INF for p = infinity")
            if not np.isfinite(self.p):
                raise GeometryError("p = infinity must be given as geometry.INF")
            if float(self.p) < 1.0:
                raise GeometryError(f"LpBall exponent must be >= 1, got {self.p}")
            object.__setattr__(self, "p", float(self.p))
        if not (self.r > 0 and np.isfinite(self.r)):
            raise GeometryError(f"radius must be positive, got {self.r}")
        if int(self.dim) < 1:
            raise GeometryError("dimension must be positive")
        object.__setattr__(self, "r", float(self.r))
        object.__setattr__(self, "dim", int(self.dim))

    @property
    def strictly_convex(self) -> bool:
        return self.p is not INF and 1.0 < self.p < np.inf and self.dim >= 1

    def _gauge(self, x):
        return lp_norm(x, self.p) / self.r

    def _support(self, d):
        return self.r * lp_norm(d, conjugate_exponent(self.p))

    def _lmo(self, d):
        d = np.asarray(d, dtype=float)
        if self.p is INF:
            return self.r * np.sign(d)
        if self.p == 1.0:
            idx = np.argmax(np.abs(d), axis=-1)
            v = np.zeros_like(d)
            np.put_along_axis(v, idx[..., None], 1.0, axis=-1)
            return self.r * v * np.sign(np.take_along_axis(d, idx[..., None], axis=-1))
        q = conjugate_exponent(self.p)
        a = np.abs(d)
        a = np.where(a < _UNDERFLOW, 0.0, a)
        s = a.max(axis=-1, keepdims=True)
        a = a / np.where(s > 0, s, 1.0)
        w = a ** (q - 1.0)
        nrm = lp_norm(w, self.p)[..., None]
        return self.r * np.sign(d) * w / nrm

    def polar(self) -> "LpBall":
        return LpBall(conjugate_exponent(self.p), 1.0 / self.r, self.dim)

    def inradius(self) -> float:
        if self.p is INF or self.p >= 2.0:
            return self.r
        return self.r * self.dim ** (0.5 - 1.0 / self.p)

    def to_dict(self) -> dict:
        return {"kind": "lp", "p": "inf" if self.p is INF else self.p,
                "r": self.r, "dim": self.dim}

    def label(self) -> str:
        p = "inf" if self.p is INF else f"{self.p:g}"
        return f"lp:{p}:{self.r:g}:{self.dim}"


@dataclass(frozen=True, eq=False)
class Ellipsoid:
    """{x : x^T Q x <= 1} for symmetric positive-definite Q."""

    Q: NDArray
    kind: str = field(default="ellipsoid", init=False)

    def __post_init__(self):
        Q = np.array(self.Q, dtype=float)
        if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
            raise GeometryError("Q must be a square matrix")
        if not np.allclose(Q, Q.T, rtol=1e-12, atol=1e-14):
            raise GeometryError("Q must be symmetric")
        ev = np.linalg.eigvalsh(Q)
        if ev.min() <= 0:
            raise GeometryError(f"Q must be positive definite (min eigenvalue {ev.min():g})")
        Q.setflags(write=False)
        Qi = np.linalg.inv(Q)
        Qi = (Qi + Qi.T) / 2
        Qi.setflags(write=False)
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "_Qinv", Qi)
        object.__setattr__(self, "_lmax", float(ev.max()))

    @property
    def dim(self) -> int:
        return self.Q.shape[0]

    strictly_convex = True

    def _gauge(self, x):
        x = np.asarray(x, dtype=float)
        return np.sqrt(np.maximum(np.einsum("...i,ij,...j->...", x, self.Q, x), 0.0))

    def _support(self, d):
        d = np.asarray(d, dtype=float)
        return np.sqrt(np.maximum(np.einsum("...i,ij,...j->...", d, self._Qinv, d), 0.0))

    def _lmo(self, d):
        d = np.asarray(d, dtype=float)
        w = d @ self._Qinv
        return w / self._support(d)[..., None]

    def polar(self) -> "Ellipsoid":
        return Ellipsoid(self._Qinv.copy())

    def inradius(self) -> float:
        return 1.0 / np.sqrt(self._lmax)

    def to_dict(self) -> dict:
        return {"kind": "ellipsoid", "Q": self.Q.tolist()}

    def label(self) -> str:
        return f"ellipsoid:{self.dim}"

    def __eq__(self, other):
        return isinstance(other, Ellipsoid) and np.array_equal(self.Q, other.Q)

    def __hash__(self):
        return hash(self.Q.tobytes())


@dataclass(frozen=True)
class ScaledBody:
    """The body ``scale * inner``."""

    inner: "ConvexBody"
    scale: float
    kind: str = field(default="scaled", init=False)

    def __post_init__(self):
        if not (self.scale > 0 and np.isfinite(self.scale)):
            raise GeometryError("scale must be positive")
        object.__setattr__(self, "scale", float(self.scale))

    @property
    def dim(self) -> int:
        return self.inner.dim

    @property
    def strictly_convex(self) -> bool:
        return self.inner.strictly_convex

    def _gauge(self, x):
        return self.inner._gauge(x) / self.scale

    def _support(self, d):
        return self.scale * self.inner._support(d)

    def _lmo(self, d):
        return self.scale * self.inner._lmo(d)

    def polar(self) -> "ScaledBody":
        return ScaledBody(self.inner.polar(), 1.0 / self.scale)

    def inradius(self) -> float:
        return self.scale * self.inner.inradius()

    def to_dict(self) -> dict:
        return {"kind": "scaled", "inner": self.inner.to_dict(), "scale": self.scale}

    def label(self) -> str:
        return f"{self.scale:g}*{self.inner.label()}"


ConvexBody = Union[LpBall, Ellipsoid, ScaledBody]


# ----------------------------------------------------------------------- operations


def _check(body: ConvexBody, x, name: str = "x") -> NDArray:
    x = np.asarray(x, dtype=float)
    if x.shape[-1:] != (body.dim,):
        raise GeometryError(f"{name} has trailing dimension {x.shape[-1:]} but body.dim = {body.dim}")
    if not np.all(np.isfinite(x)):
        raise GeometryError(f"{name} has non-finite entries")
    return x


def gauge(body: ConvexBody, x) -> float | NDArray:
    """Minkowski functional inf{lam >= 0 : x in lam*C}. Accepts batches (..., dim)."""
    x = _check(body, x)
    g = body._gauge(x)
    return float(g) if np.ndim(g) == 0 else g


def support(body: ConvexBody, d) -> float | NDArray:
    """sup over v in C of <v, d>; equals the gauge of the polar body."""
    d = _check(body, d, "d")
    s = body._support(d)
    return float(s) if np.ndim(s) == 0 else s


def lmo(body: ConvexBody, d) -> Vector:
    """A maximizer of <d, v> over the body.

    For p = 1 ties go to the lowest index among maximal |d_i|; for p = INF zero
    components of d map to 0.
    """
    d = _check(body, d, "d")
    if np.any(np.max(np.abs(d), axis=-1) == 0):
        raise GeometryError("ambiguous LMO: direction d = 0")
    return body._lmo(d)


def polar(body: ConvexBody) -> ConvexBody:
    return body.polar()


def in_normal_cone(body: ConvexBody, x, d, tol: float = DEFAULT_TOL) -> bool:
    """True iff d lies in the normal cone of the body at the boundary point x."""
    x = _check(body, x)
    d = _check(body, d, "d")
    if abs(gauge(body, x) - 1.0) > tol:
        raise GeometryError(f"x is not on the boundary (gauge = {gauge(body, x):.12g})")
    if not np.any(d):
        raise GeometryError("direction d = 0")
    s = support(body, d)
    return bool(s - float(d @ x) <= tol * s)


def support_gradient(body: ConvexBody, d) -> Vector:
    """Gradient of the support function, which is the (unique) LMO output."""
    if not body.strictly_convex:
        raise GeometryError("support not differentiable everywhere: body is not strictly convex")
    return lmo(body, d)


# ------------------------------------------------------------------------- sampling


def sample_directions(body: ConvexBody, n: int, rng: np.random.Generator,
                      normalize: bool = True) -> NDArray:
    """Gaussian directions, optionally scaled to the polar unit sphere."""
    g = rng.standard_normal((n, body.dim))
    if normalize:
        g = g / body._support(g)[:, None]
    return g


def sample_boundary(body: ConvexBody, n: int, rng: np.random.Generator,
                    via: str = "radial") -> NDArray:
    """Points with gauge 1.

    ``via="lmo"`` maps Gaussian directions through the LMO (exposed points only);
    ``via="radial"`` rescales Gaussian vectors by their gauge, which also reaches
    the relative interior of flat faces.
    """
    g = rng.standard_normal((n, body.dim))
    if via == "lmo":
        return body._lmo(g)
    return g / body._gauge(g)[:, None]


def bounding_box(body: ConvexBody) -> NDArray:
    """Half-widths of the axis-aligned bounding box, sigma_C(e_i)."""
    return body._support(np.eye(body.dim))


def sample_interior(body: ConvexBody, n: int, rng: np.random.Generator) -> NDArray:
    """Uniform samples from the body.

    Rejection sampling on the bounding box for dim <= 6; radial sampling
    (boundary point times U^(1/m)) above that.
    """
    m = body.dim
    if m > 6:
        b = sample_boundary(body, n, rng)
        return b * rng.random(n)[:, None] ** (1.0 / m)
    hw = bounding_box(body)
    out = []
    count = 0
    while count < n:
        cand = (2 * rng.random((max(2 * (n - count), 64), m)) - 1) * hw
        keep = cand[body._gauge(cand) <= 1.0]
        out.append(keep)
        count += len(keep)
    return np.concatenate(out)[:n]


def sample_mixed(body: ConvexBody, n: int, rng: np.random.Generator) -> NDArray:
    """Half interior, half boundary samples; used by the violation scans."""
    k = n // 2
    return np.concatenate([sample_interior(body, n - k, rng), sample_boundary(body, k, rng)])


# ---------------------------------------------------------------- serialization


def body_from_dict(doc: dict) -> ConvexBody:
    kind = doc.get("kind")
    if kind == "lp":
        unknown = set(doc) - {"kind", "p", "r", "dim"}
        if unknown:
            raise GeometryError(f"unknown fields in lp body: {sorted(unknown)}")
        if "p" not in doc or "dim" not in doc:
            raise GeometryError("lp body requires 'p' and 'dim'")
        p = doc["p"]
        p = INF if (isinstance(p, str) and p.lower() in ("inf", "infinity")) else float(p)
        return LpBall(p, float(doc.get("r", 1.0)), int(doc["dim"]))
    if kind == "ellipsoid":
        if "Q" not in doc:
            raise GeometryError("ellipsoid body requires 'Q'")
        return Ellipsoid(np.array(doc["Q"], dtype=float))
    if kind == "scaled":
        return ScaledBody(body_from_dict(doc["inner"]), float(doc["scale"]))
    raise GeometryError(f"unknown body kind {kind!r}")


def body_to_json(body: ConvexBody) -> str:
    return json.dumps(body.to_dict())


def body_from_json(text: str) -> ConvexBody:
    return body_from_dict(json.loads(text))


def parse_body(spec: str | dict) -> ConvexBody:
    """Parse ``lp:<p|inf>:<r>:<dim>``, ``ell:<path-to-Q.json>`` or a JSON dict."""
    if isinstance(spec, dict):
        return body_from_dict(spec)
    spec = spec.strip()
    if spec.startswith("{"):
        return body_from_json(spec)
    parts = spec.split(":")
    if parts[0] == "lp":
        if len(parts) != 4:
            raise GeometryError(f"body shorthand must be lp:<p|inf>:<r>:<dim>, got {spec!r}")
        p = INF if parts[1].lower() == "inf" else float(parts[1])
        return LpBall(p, float(parts[2]), int(parts[3]))
    if parts[0] in ("ell", "ellipsoid"):
        path = spec.split(":", 1)[1]
        with open(path) as fh:
            doc = json.load(fh)
        Q = doc["Q"] if isinstance(doc, dict) else doc
        return Ellipsoid(np.array(Q, dtype=float))
    raise GeometryError(f"cannot parse body spec {spec!r}")
