"""Closed-form constant transfers between characterizations of uniform convexity.

Also hosts a brute-force Legendre transform on grids, sampled checkers for
functional uniform convexity/smoothness, and the Hessian certificate for the
squared lp norm.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from numpy.typing import NDArray

from . import geometry as geo
from .geometry import ConvexBody
from .moduli import UCParams

VIOLATION_RTOL = 1e-9
LAMBDAS = np.array([0.01, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.99])


class DualityError(ValueError):
    pass


def _conj(p: float) -> float:
    return p / (p - 1.0)


@dataclass(frozen=True)
class PowerFuncParams:
    coefficient: float
    exponent: float

    def __post_init__(self):
        if not self.coefficient > 0:
            raise DualityError("coefficient must be positive")
        if not self.exponent > 1:
            raise DualityError("exponent must exceed 1")

    @property
    def conjugate_exponent(self) -> float:
        return _conj(self.exponent)


@dataclass(frozen=True)
class TransferResult:
    from_item: str
    to_item: str
    in_params: UCParams
    out_params: UCParams
    formula_id: str
    note: str = ""

    def row(self) -> dict:
        return {"from_item": self.from_item, "to_item": self.to_item,
                "alpha_in": self.in_params.alpha, "p_in": self.in_params.exponent,
                "alpha_out": self.out_params.alpha, "p_out": self.out_params.exponent,
                "formula_id": self.formula_id}


TRANSFER_COLUMNS = ["from_item", "to_item", "alpha_in", "p_in", "alpha_out", "p_out", "formula_id"]


def transfers_to_csv(results: Sequence[TransferResult]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=TRANSFER_COLUMNS, lineterminator="\n")
    w.writeheader()
    for r in results:
        w.writerow({k: (repr(float(v)) if isinstance(v, float) else v) for k, v in r.row().items()})
    return buf.getvalue()


# ------------------------------------------------------------- power conjugates


def power_conjugate_params(alpha: float, p: float) -> PowerFuncParams:
    """Coefficient and exponent of the conjugate of ``alpha * N(.)**p``.

    For any norm N, ``(alpha N**p)^* = k * N_dual**q`` with
    ``k = (alpha p)**(-1/(p-1)) - alpha (alpha p)**(-q)``.
    """
    if not p > 1:
        raise DualityError(f"p must exceed 1, got {p}")
    if not alpha > 0:
        raise DualityError(f"alpha must be positive, got {alpha}")
    q = _conj(p)
    ap = alpha * p
    k = 1.0 / ap ** (1.0 / (p - 1.0)) - alpha / ap ** q
    return PowerFuncParams(k, q)


# ------------------------------------------------------------ discrete Legendre


@dataclass(frozen=True)
class SampledFunction:
    """Values of f on a tensor grid over [-R, R]^m with spacing h."""

    axis: NDArray
    values: NDArray

    def __post_init__(self):
        axis = np.asarray(self.axis, dtype=float)
        if axis.ndim != 1 or len(axis) < 2 or np.any(np.diff(axis) <= 0):
            raise DualityError("axis must be a strictly increasing 1-D array")
        vals = np.asarray(self.values, dtype=float)
        if any(s != len(axis) for s in vals.shape):
            raise DualityError("values must have one axis of grid length per dimension")
        if not np.all(np.isfinite(vals)):
            raise DualityError("f must be finite on the grid")
        object.__setattr__(self, "axis", axis)
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_callable(cls, f: Callable[[NDArray], NDArray], radius: float, n: int, dim: int = 1):
        """``f`` maps an (k, dim) batch to k values."""
        if not radius > 0 or n < 2:
            raise DualityError("need radius > 0 and at least 2 nodes")
        axis = np.linspace(-radius, radius, n)
        mesh = np.stack(np.meshgrid(*([axis] * dim), indexing="ij"), axis=-1)
        vals = np.asarray(f(mesh.reshape(-1, dim)), dtype=float).reshape((n,) * dim)
        return cls(axis, vals)

    @property
    def dim(self) -> int:
        return self.values.ndim

    @property
    def h(self) -> float:
        return float(np.max(np.diff(self.axis)))

    def points(self) -> NDArray:
        mesh = np.stack(np.meshgrid(*([self.axis] * self.dim), indexing="ij"), axis=-1)
        return mesh.reshape(-1, self.dim)


@dataclass(frozen=True)
class ConjugateValue:
    value: float
    argmax: NDArray
    boundary_active: bool
    error_bound: float

    @property
    def trusted(self) -> bool:
        return not self.boundary_active

    @property
    def status(self) -> str:
        return "untrusted (boundary active)" if self.boundary_active else "ok"


def discrete_conjugate(f: SampledFunction, y) -> ConjugateValue:
    """max over grid nodes of <x, y> - f(x).

    The grid maximum underestimates the true conjugate by at most
    ``h sqrt(m) / 2 * (||y|| + local slope of f)`` while the true maximizer lies
    strictly inside the box; a maximizer on the box boundary is flagged.
    """
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if y.shape != (f.dim,):
        raise DualityError("y dimension mismatch")
    X = f.points()
    vals = X @ y - f.values.reshape(-1)
    k = int(np.argmax(vals))
    idx = np.unravel_index(k, f.values.shape)
    n = len(f.axis)
    boundary = any(i in (0, n - 1) for i in idx)
    # local slope from the neighbouring nodes
    slope = 0.0
    for ax, i in enumerate(idx):
        for j in (i - 1, i + 1):
            if 0 <= j < n:
                nb = list(idx)
                nb[ax] = j
                slope = max(slope, abs(f.values[tuple(nb)] - f.values[idx]) / abs(f.axis[j] - f.axis[i]))
    err = 0.5 * f.h * np.sqrt(f.dim) * (np.linalg.norm(y) + slope)
    return ConjugateValue(float(vals[k]), X[k], boundary, float(err))


def conjugate_on_grid(values: NDArray, x: NDArray, y: NDArray) -> tuple[NDArray, NDArray]:
    """1-D discrete conjugate of samples ``values`` at nodes ``x``, evaluated on ``y``.

    Returns the conjugate values and a boolean mask of boundary-active entries.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    M = np.outer(y, x) - np.asarray(values, dtype=float)[None, :]
    k = np.argmax(M, axis=1)
    return M[np.arange(len(y)), k], (k == 0) | (k == len(x) - 1)


# --------------------------------------------------------- Fenchel and polarity


def _uc(alpha, p, item="1f"):
    return UCParams(float(alpha), float(p), item)


def fenchel_uc_to_us(c: float, p: float, sharp: bool = False) -> TransferResult:
    """A (c, p)-uniformly convex function has a (1/(q c^(q-1)), q)-uniformly smooth conjugate.

    With the zero-order definitions the conjugate of (c/p)|.|^p is (c^(1-q)/q)|.|^q,
    so the admissible smoothness constant is 1/c^(q-1), a factor q above the stated
    one. ``sharp=True`` returns that value; the default keeps the stated formula.
    """
    if not p >= 2:
        raise DualityError(f"p must be at least 2, got {p}")
    if not c > 0:
        raise DualityError("c must be positive")
    q = _conj(p)
    alpha = 1.0 / c ** (q - 1.0) if sharp else 1.0 / (q * c ** (q - 1.0))
    return TransferResult("fun_uc", "fun_us", _uc(c, p), UCParams(alpha, q, "1e"),
                          "fenchel:uc->us" + (":sharp" if sharp else ""))


def fenchel_us_to_uc(alpha: float, q: float) -> TransferResult:
    """A (alpha, q)-uniformly smooth function has a (1/(p alpha^(p-1)), p)-uniformly convex conjugate."""
    if not 1 < q <= 2:
        raise DualityError(f"q must lie in (1, 2], got {q}")
    if not alpha > 0:
        raise DualityError("alpha must be positive")
    p = _conj(q)
    return TransferResult("fun_us", "fun_uc", UCParams(alpha, q, "1e"), _uc(1.0 / (p * alpha ** (p - 1.0)), p),
                          "fenchel:us->uc")


def polar_transfer(params: UCParams, direction: str) -> TransferResult:
    """Move a set certificate to the polar body.

    ``uc_to_us``: C (alpha, p)-UC gives C° (1/(2q(2 alpha p)^(q-1)), q)-US.
    ``us_to_uc``: C (alpha, q)-US gives C° (1/(2p(2 alpha q)^(1/(q-1))), p)-UC.
    """
    a = params.alpha
    if direction == "uc_to_us":
        p = params.exponent if params.kind == "convex" else params.p
        q = _conj(p)
        out = UCParams(1.0 / (2 * q * (2 * a * p) ** (q - 1.0)), q, "1e")
    elif direction == "us_to_uc":
        if params.kind != "smooth":
            raise DualityError("us_to_uc needs a smoothness certificate (exponent q)")
        q = params.exponent
        p = _conj(q)
        out = UCParams(1.0 / (2 * p * (2 * a * q) ** (1.0 / (q - 1.0))), p, "1c")
    else:
        raise DualityError(f"unknown direction {direction!r}")
    return TransferResult(params.item, out.item, params, out, f"polar:{direction}")


# ------------------------------------------- global characterization constant map


def _edge_ac(a, e):
    return a, e


def _edge_ab(a, e):
    return 2 * a, e


def _edge_bd(a, p):
    q = _conj(p)
    return 1.0 / (2 * a) ** (q - 1.0), q - 1.0


def _edge_ec(c, q):
    p = _conj(q)
    return q ** (p - 1.0) / (2 ** (2 * p - 1.0) * p * c ** (p - 1.0)), p


def _edge_fe(a, p):
    # the clause writes c for the constant introduced as alpha; read as the same symbol
    q = _conj(p)
    return p ** (q - 1.0) / ((p - 1.0) * q * a ** (q - 1.0)), q


def _edge_ef(a, q):
    p = _conj(q)
    return q ** (p - 1.0) / ((q - 1.0) * p * a ** (p - 1.0)), p


def _edge_de(c, h):
    q = 1.0 + h
    return 2 * q * q * (c * 2 ** (q - 1.0) + 1.0), q


EDGES = {
    ("a", "c"): (_edge_ac, "remark:a<->c"),
    ("c", "a"): (_edge_ac, "remark:a<->c"),
    ("a", "b"): (_edge_ab, "remark:a->b"),
    ("b", "d"): (_edge_bd, "remark:b->d"),
    ("e", "c"): (_edge_ec, "remark:e->c"),
    ("f", "e"): (_edge_fe, "remark:f->e"),
    ("e", "f"): (_edge_ef, "remark:e->f"),
    ("d", "e"): (_edge_de, "remark:d->e"),
}


def _letter(item: str) -> str:
    s = item[-1]
    if s not in "abcdef" or item not in (s, "1" + s):
        raise DualityError(f"unknown global item {item!r}")
    return s


def theorem1_transfer(from_item: str, to_item: str, params: UCParams) -> TransferResult:
    """Apply one quoted clause of the global equivalence; composite paths must be chained."""
    a, b = _letter(from_item), _letter(to_item)
    if params.item != "1" + a:
        raise DualityError(f"params certify item {params.item}, not 1{a}")
    if a == b:
        return TransferResult("1" + a, "1" + b, params, params, "identity")
    if (a, b) not in EDGES:
        raise DualityError(f"no direct clause {a}->{b}; compose explicitly")
    fn, fid = EDGES[(a, b)]
    alpha, e = fn(params.alpha, params.exponent)
    note = "c read as alpha" if (a, b) == ("f", "e") else ""
    return TransferResult("1" + a, "1" + b, params, UCParams(alpha, e, "1" + b), fid, note)


def compose_transfers(path: Sequence[str], params: UCParams) -> list[TransferResult]:
    """Chain clauses along ``path`` (e.g. ``"cabde"``), returning each step."""
    steps = []
    cur = params
    for a, b in zip(path[:-1], path[1:]):
        r = theorem1_transfer(a, b, cur)
        steps.append(r)
        cur = r.out_params
    return steps


# -------------------------------------------------------- functional checkers


@dataclass
class FunctionCheckReport:
    kind: str
    n_checks: int
    zero_order_violations: int
    first_order_violations: int
    holder_violations: Optional[int] = None
    worst_excess: float = 0.0
    holder_constant: Optional[float] = None
    seed: int = 0

    @property
    def violations(self) -> int:
        return self.zero_order_violations + self.first_order_violations + (self.holder_violations or 0)

    @property
    def passed(self) -> bool:
        return self.violations == 0

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["violations"] = self.violations
        d["passed"] = self.passed
        return d


def _viol(lhs, rhs):
    """Count of lhs <= rhs failures beyond the relative tolerance, and the worst excess."""
    excess = lhs - rhs - VIOLATION_RTOL * (1.0 + np.abs(rhs))
    return int(np.sum(excess > 0)), float(np.max(lhs - rhs)) if len(lhs) else 0.0


def _pairs(dim, samples, rng, box):
    x = rng.uniform(-box, box, (samples, dim))
    y = rng.uniform(-box, box, (samples, dim))
    return x, y


def check_function_uc(f, subgrad, alpha: float, p: float, norm: ConvexBody, samples: int = 2000,
                      seed: int = 0, box: float = 1.0) -> FunctionCheckReport:
    """Sample the zero-order and first-order uniform convexity inequalities.

    ``f`` and ``subgrad`` act on (n, m) batches.
    """
    rng = np.random.default_rng(seed)
    x, y = _pairs(norm.dim, samples, rng, box)
    dist = norm._gauge(x - y) ** p
    fx, fy = f(x), f(y)
    z_v, worst = 0, -np.inf
    for lam in LAMBDAS:
        lhs = f(lam * x + (1 - lam) * y) + alpha / p * lam * (1 - lam) * dist
        v, w = _viol(lhs, lam * fx + (1 - lam) * fy)
        z_v += v
        worst = max(worst, w)
    rhs = fy
    lhs = fx + np.einsum("ij,ij->i", subgrad(x), y - x) + alpha / p * dist
    f_v, w = _viol(lhs, rhs)
    worst = max(worst, w)
    return FunctionCheckReport("uc", samples * (len(LAMBDAS) + 1), z_v, f_v, None, worst, None, seed)


def holder_constant_from_smoothness(c: float, q: float) -> float:
    """Gradient Hölder constant implied by first-order (c, q)-smoothness: c / (q-1)^(1/p)."""
    p = _conj(q)
    return c / (q - 1.0) ** (1.0 / p)


def check_function_us(f, grad, c: float, q: float, norm: ConvexBody, samples: int = 2000,
                      seed: int = 0, box: float = 1.0) -> FunctionCheckReport:
    """Sample the zero-order, first-order and Hölder-gradient smoothness inequalities.

    The dual norm of the gradient gap is the support function of ``norm``.
    """
    if not 1 < q <= 2:
        raise DualityError("q must lie in (1, 2]")
    rng = np.random.default_rng(seed)
    x, y = _pairs(norm.dim, samples, rng, box)
    dist = norm._gauge(x - y)
    fx, fy = f(x), f(y)
    gx, gy = grad(x), grad(y)
    z_v, worst = 0, -np.inf
    for lam in LAMBDAS:
        rhs = f(lam * x + (1 - lam) * y) + c / q * lam * (1 - lam) * dist ** q
        v, w = _viol(lam * fx + (1 - lam) * fy, rhs)
        z_v += v
        worst = max(worst, w)
    f_v, w = _viol(fy, fx + np.einsum("ij,ij->i", gx, y - x) + c / q * dist ** q)
    worst = max(worst, w)
    ch = holder_constant_from_smoothness(c, q)
    h_v, w = _viol(norm._support(gx - gy), ch * dist ** (q - 1.0))
    worst = max(worst, w)
    return FunctionCheckReport("us", samples * (len(LAMBDAS) + 2), z_v, f_v, h_v, worst, ch, seed)


# ------------------------------------------------------------ lp Hessian


@dataclass(frozen=True)
class HessianDet:
    value: float
    degenerate: bool
    flag: str = ""


def _on_lp_sphere(x, p, tol=1e-8):
    return abs(float(geo.lp_norm(x, p)) - 1.0) <= tol


def lp_hessian_det(lam, p: float) -> HessianDet:
    """Determinant of the Hessian of ||.||_p^2 at a point of the lp unit sphere."""
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    if not p >= 2:
        raise DualityError("p must be at least 2")
    if not _on_lp_sphere(lam, p):
        raise DualityError("point must lie on the lp unit sphere")
    m = len(lam)
    a = np.abs(lam)
    if np.any(a == 0) and p > 2:
        return HessianDet(0.0, True, "degenerate: not locally strongly convex certificate")
    val = 2.0 ** m * (p - 1.0) ** (m - 1) * float(np.prod(a ** (p - 2.0)))
    return HessianDet(val, False)


def fd_hessian(f: Callable[[NDArray], float], x: NDArray, h: Optional[float] = None) -> NDArray:
    """Central-difference Hessian, symmetrized."""
    x = np.asarray(x, dtype=float)
    if h is None:
        h = 1e-4 * max(1.0, float(np.linalg.norm(x)))
    m = len(x)
    E = np.eye(m) * h
    H = np.empty((m, m))
    for i in range(m):
        for j in range(m):
            H[i, j] = (f(x + E[i] + E[j]) - f(x + E[i] - E[j]) - f(x - E[i] + E[j])
                       + f(x - E[i] - E[j])) / (4 * h * h)
    return 0.5 * (H + H.T)


def lp_squared(p: float) -> Callable[[NDArray], float]:
    return lambda z: float(geo.lp_norm(z, p)) ** 2


def local_sc_certificate(x, p: float, tol: float = 1e-6, coord_floor: float = 1e-6) -> tuple[float, bool]:
    """Minimum eigenvalue of the finite-difference Hessian of ||.||_p^2 at x, and whether it certifies."""
    x = np.asarray(x, dtype=float)
    if not p >= 2:
        raise DualityError("p must be at least 2")
    if not _on_lp_sphere(x, p):
        raise DualityError("x must lie on the lp unit sphere")
    H = fd_hessian(lp_squared(p), x)
    lam_min = float(np.linalg.eigvalsh(H)[0])
    ok = lam_min > tol and (p == 2 or bool(np.all(np.abs(x) > coord_floor)))
    return lam_min, ok
