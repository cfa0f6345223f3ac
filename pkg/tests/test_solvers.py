import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from uc_kit import LpBall, Ellipsoid
from uc_kit import solvers as sol
from uc_kit.solvers import SolverAbort, SolverError

L2 = LpBall(2.0, 1.0, 2)


def quad(b, body=L2):
    return sol.make_objective({"kind": "quadratic", "b": b}, body)


def test_quadratic_constants():
    obj = quad([2.0, 0.0])
    assert obj.smoothness_L == 1.0
    assert obj.grad_lower_bound_c == pytest.approx(1.0)
    assert np.allclose(obj.optimum[0], [1.0, 0.0])
    assert obj.fstar == pytest.approx(0.5)


def test_interior_b_has_no_gradient_bound():
    assert quad([0.5, 0.0]).grad_lower_bound_c is None


def test_custom_broken_gradient_rejected():
    spec = {"kind": "custom", "dim": 2, "value": lambda x: float(x @ x), "gradient": lambda x: x}
    with pytest.raises(SolverError):
        sol.make_objective(spec)


def test_custom_objective_estimates_L():
    A = np.diag([3.0, 1.0])
    spec = {"kind": "custom", "dim": 2, "value": lambda x: 0.5 * float(x @ A @ x), "gradient": lambda x: A @ x}
    obj = sol.make_objective(spec)
    assert 3.0 <= obj.smoothness_L <= 3.0 * 1.2 + 1e-6


def test_l2_exterior_line_search():
    obj = quad([2.0, 0.0])
    tr = sol.vanilla_fw(obj, L2, "line_search", 200)
    assert np.linalg.norm(tr.final - [1.0, 0.0]) <= 1e-6
    assert len(tr) <= 201


def test_max_iter_zero():
    tr = sol.vanilla_fw(quad([2.0, 0.0]), L2, "agnostic", 0)
    assert len(tr) == 1
    assert list(tr.snapshots) == [0]


def test_interior_optimum_agnostic_is_sublinear():
    tr = sol.vanilla_fw(quad([0.5, 0.0]), L2, "agnostic", 5000)
    fit = sol.fit_rate(tr, 0.0)
    assert fit.model == "power_law"
    # 2/(k+2) steps zigzag around an interior optimum; the gap is noisy (r^2 ~ 0.2)
    # but its trend is close to 1/k^2, well below 1/k
    assert -2.5 < fit.exponent_or_ratio < -1.5


def test_pafw_one_step_unrolled():
    body = LpBall(4.0, 1.0, 2)
    obj = quad([1.2, 0.7], body)
    x0 = np.array([0.0, -1.0])
    tr = sol.pafw(obj, body, 1, x0=x0)
    # k = 1: z_1 = 0 * y_0 + 1 * x_0, x_1 = lmo(-grad f(z_1)), y_1 = (1/3) y_0 + (2/3) x_1
    z1 = x0
    x1 = body._lmo(-obj.gradient(z1))
    y1 = (1 - 2 / 3) * x0 + (2 / 3) * x1
    assert np.allclose(tr.meta["z_first"][0], z1)
    assert np.allclose(tr.final, y1, atol=0, rtol=0)
    assert tr.f_value[1] == obj.value(y1)


BODIES = [LpBall(2.0, 1.0, 3), LpBall(4.0, 1.0, 3), LpBall(1.0, 1.0, 3), Ellipsoid(np.diag([1.0, 4.0, 2.0]))]


@pytest.mark.parametrize("body", BODIES, ids=lambda b: b.label())
@pytest.mark.parametrize("rule", ["line_search", "short_step"])
def test_monotone_descent(body, rule):
    tr = sol.vanilla_fw(quad([1.5, -2.0, 0.7], body), body, rule, 300)
    assert np.all(np.diff(tr.f_value) <= 1e-12 * (1 + np.abs(tr.f_value[:-1])))


@settings(max_examples=25)
@given(st.integers(0, 2 ** 32 - 1), st.sampled_from(BODIES), st.sampled_from(["fw", "pafw"]))
def test_feasibility_and_gap_dominance(seed, body, solver):
    rng = np.random.default_rng(seed)
    b = 2.0 * rng.standard_normal(3)
    obj = quad(b, body)
    tr = (sol.pafw(obj, body, 200, seed=seed, snapshot_every=1) if solver == "pafw"
          else sol.vanilla_fw(obj, body, "agnostic", 200, seed=seed, snapshot_every=1))
    xs = np.array(list(tr.snapshots.values()))
    assert np.all(body._gauge(xs) <= 1 + 1e-9)
    fstar = sol.reference_fstar(obj, body, 300)
    assert np.all(tr.fw_gap >= tr.f_value - fstar - 1e-9)


def test_tol_gap_stops_early():
    tr = sol.vanilla_fw(quad([2.0, 0.0]), L2, "line_search", 1000, tol_gap=1e-8)
    assert tr.fw_gap[-1] <= 1e-8 and len(tr) < 1000


def test_nonfinite_aborts():
    obj = sol.Objective(lambda x: float("nan"), lambda x: x, 1.0)
    with pytest.raises(SolverAbort):
        sol.vanilla_fw(obj, L2, "agnostic", 5)


def test_unknown_rule():
    with pytest.raises(SolverError):
        sol.vanilla_fw(quad([2.0, 0.0]), L2, "heavy_ball", 5)


def test_runs_are_deterministic():
    body = LpBall(3.0, 1.0, 3)
    obj = quad([1.0, 1.0, 1.0], body)
    a = sol.pafw(obj, body, 300, seed=11)
    b = sol.pafw(obj, body, 300, seed=11)
    assert np.array_equal(a.f_value, b.f_value)


@pytest.mark.parametrize("p,exponent", [(5.0, -1.5), (4.0, -5 / 3), (2.0, -2.0), (3.0, -2.0)])
def test_envelope_exponents(p, exponent):
    assert sol.envelope_exponent(p) == pytest.approx(exponent)


def test_envelope_regimes():
    k = np.array([10.0, 100.0])
    base = sol.pafw_envelope(1.0, 2.0, 1.0, 1.0, 1.0, 1.0)
    assert np.allclose(sol.pafw_envelope(k, 2.0, 1.0, 1.0, 1.0, 1.0), base / k ** 2)
    e3 = sol.pafw_envelope(k, 3.0, 1.0, 1.0, 1.0, 1.0)
    assert e3[1] / e3[0] == pytest.approx(np.log(101) / np.log(11) / 100)
    e5 = sol.pafw_envelope(k, 5.0, 1.0, 1.0, 1.0, 1.0)
    assert e5[1] / e5[0] == pytest.approx(10 ** -1.5)


def test_fit_geometric_synthetic():
    k = np.arange(1, 400)
    fit = sol.fit_gaps(k, 5 * 0.9 ** k, window=(1, 399))
    assert fit.model == "geometric"
    assert fit.exponent_or_ratio == pytest.approx(0.9, abs=1e-6)
    assert fit.r_squared > 0.9999


def test_fit_power_law_synthetic():
    k = np.arange(1, 2000)
    fit = sol.fit_gaps(k, 3.0 / k ** 2)
    assert fit.model == "power_law"
    assert fit.exponent_or_ratio == pytest.approx(-2.0, abs=1e-6)


def test_fit_converged_exactly():
    k = np.arange(0, 100)
    assert sol.fit_gaps(k, np.where(k < 3, 1.0, 0.0)).model == "converged_exactly"


def test_projection_ellipsoid():
    body = Ellipsoid(np.diag([1.0, 4.0]))
    b = np.array([2.0, 1.0])
    x = sol.project(body, b)
    assert body._gauge(x) == pytest.approx(1.0)
    # optimality: b - x is an outward normal at x
    r, n = b - x, body.Q @ x
    assert r[0] * n[1] - r[1] * n[0] == pytest.approx(0.0, abs=1e-9)


def test_quadratic_with_optimum():
    body = LpBall(4.0, 1.0, 2)
    x = np.array([1.0, 0.5])
    x /= body._gauge(x)
    obj = sol.quadratic_with_optimum(body, x, 0.5)
    assert np.linalg.norm(obj.gradient(x)) == pytest.approx(0.5)
    tr = sol.vanilla_fw(obj, body, "line_search", 500)
    assert tr.f_value[-1] - obj.fstar < 1e-10
