import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from uc_kit import LpBall
from uc_kit import rademacher as rad
from uc_kit.moduli import NotUC, UCParams

SEG = LpBall(2.0, 1.0, 1)
ONES = rad.DataModel(1, "fixed_points", points=[[1.0]])


def test_single_sample_is_one():
    assert rad.estimate_rademacher(SEG, ONES, 1, 200)[0] == 1.0


def test_two_samples_half_by_enumeration():
    xs = np.ones((2, 1))
    signs = rad._signs(2)
    exact = np.mean(SEG._support(signs @ xs / 2))
    assert exact == 0.5
    assert rad.estimate_rademacher(SEG, ONES, 2, 20_000, seed=1)[0] == pytest.approx(0.5, abs=0.02)


@settings(max_examples=15)
@given(st.floats(0.2, 5.0))
def test_scale_equivariance(s):
    body = LpBall(3.0, 1.0, 3)
    d1 = rad.DataModel(3, "sphere_uniform_in_polar_gauge", D_bound=1.0)
    ds = rad.DataModel(3, "sphere_uniform_in_polar_gauge", D_bound=s)
    a = rad.rademacher_samples(body, d1, 8, 50, seed=4)
    b = rad.rademacher_samples(body, ds, 8, 50, seed=4)
    assert np.allclose(b, s * a, rtol=1e-12)


@pytest.mark.parametrize("dist", ["sphere_uniform_in_polar_gauge", "gaussian_clipped", "basis"])
def test_data_respects_bound(dist, rng):
    body = LpBall(4.0, 1.0, 5)
    x = rad.DataModel(5, dist, D_bound=2.0).sample(body, (300,), rng)
    assert np.all(body._support(x) <= 2.0 + 1e-12)


def test_basis_sparse_path_matches_dense():
    body = LpBall(4.0, 1.0, 6)
    data = rad.DataModel(6, "basis")
    sparse = rad.rademacher_samples(body, data, 5, 4000, seed=2).mean()
    x = data.sample(body, (4000, 5), np.random.default_rng(9))
    eps = np.random.default_rng(10).choice([-1.0, 1.0], (4000, 5))
    dense = body._support(np.einsum("tn,tnm->tm", eps, x) / 5).mean()
    assert sparse == pytest.approx(dense, rel=0.05)


def test_monte_carlo_matches_enumeration():
    body = LpBall(4.0, 1.0, 2)
    pts = np.array([[0.3, -0.2], [0.1, 0.5], [-0.4, 0.05], [0.2, 0.2]])
    data = rad.DataModel(2, "fixed_points", points=pts)
    exact = np.mean(body._support(rad._signs(4) @ pts / 4))
    mc, se = rad.estimate_rademacher(body, data, 4, 40_000, seed=3)
    assert abs(mc - exact) < 4 * se


def test_support_matches_sampled_sup_from_below():
    body = LpBall(4.0, 1.0, 3)
    rng = np.random.default_rng(0)
    s = rng.standard_normal(3) / 10
    brute = rad.brute_force_sup(body, s, 10_000, rng)
    closed = float(body._support(s))
    assert brute <= closed + 1e-12
    assert closed - brute <= 1e-2


def test_rejects_not_uc():
    with pytest.raises(rad.RademacherError):
        rad.check_rademacher_bound(LpBall(1.0, 1.0, 2), NotUC("flat"), rad.DataModel(2), [4, 8])


def test_singleton_grid_has_no_slope():
    rep = rad.check_rademacher_bound(LpBall(2.0, 1.0, 2), UCParams(0.125, 2.0), rad.DataModel(2), [16], 200)
    assert rep.slope is None and not rep.slope_ok(0.1)
    assert rep.empirical_constant > 0


def test_chained_constant_steps():
    C, steps = rad.chained_type_constant(UCParams(0.125, 2.0))
    assert [s.to_item for s in steps] == ["1a", "1b", "1d", "1e"]
    assert C == pytest.approx(steps[-1].out_params.alpha / 2)


def test_euclidean_type_equality():
    rep = rad.check_type_induction(LpBall(2.0, 1.0, 4), 2.0, 2.0, sequences=60, seed=1)
    assert rep.exact and rep.violations == 0
    assert rep.max_equality_error <= 1e-12


def test_single_element_sequence_needs_cprime_at_least_q():
    q = 1.5
    x = [np.array([[0.3, -1.2]])]
    assert rad.check_type_induction(LpBall(3.0, 1.0, 2), q, q, sequences=x).violations == 0
    assert rad.check_type_induction(LpBall(3.0, 1.0, 2), q, 0.99 * q, sequences=x).violations == 1


def test_long_sequences_use_monte_carlo():
    xs = [np.random.default_rng(0).standard_normal((20, 2))]
    rep = rad.check_type_induction(LpBall(2.0, 1.0, 2), 2.0, 2.2, sequences=xs)
    assert not rep.exact and rep.violations == 0


def test_type_q_range():
    with pytest.raises(rad.RademacherError):
        rad.check_type_induction(LpBall(2.0, 1.0, 2), 2.5, 3.0)
