import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dctc import measures as M
from dctc.errors import DimensionError, ResourceLimitError

seeds = st.integers(min_value=0, max_value=2**32 - 1)
A1 = M.FactorSpace(1, "A")
B2 = M.FactorSpace(2, "B")


def random_measure(rng, space, n=None):
    n = n or int(rng.integers(1, 8))
    w = rng.random(n) + 0.05
    return M.AtomicMeasure(space, w / w.sum(), rng.normal(size=(n, space.dim)))


def test_rejects_bad_weights():
    with pytest.raises(ValueError, match="sum"):
        M.AtomicMeasure(A1, [0.5, 0.4], [[0.0], [1.0]])
    with pytest.raises(ValueError):
        M.AtomicMeasure(A1, [1.5, -0.5], [[0.0], [1.0]])
    with pytest.raises(ValueError):
        M.AtomicMeasure(A1, [1.0], [[np.nan]])
    with pytest.raises(ValueError):
        M.AtomicMeasure(A1, [], np.zeros((0, 1)))


def test_measure_is_read_only():
    mu = M.dirac([1.0], A1)
    with pytest.raises(ValueError):
        mu.weights[0] = 2.0
    with pytest.raises(AttributeError):
        mu.weights = np.array([1.0])


@given(seeds)
@settings(max_examples=40, deadline=None)
def test_product_marginals_are_exact(seed):
    rng = np.random.default_rng(seed)
    mu_a, mu_b = random_measure(rng, A1), random_measure(rng, B2)
    prod = M.product_measure(mu_a, mu_b)
    assert prod.is_product and len(prod) == len(mu_a) * len(mu_b)
    dic = M.gaussian_functions(mu_a.points, 0.7, "A") + M.clamp_functions(1, "A")
    assert M.bl_discrepancy(M.marginal_a(prod), mu_a, dic) <= 1e-12
    dic_b = M.gaussian_functions(mu_b.points, 0.7, "B") + M.clamp_functions(2, "B")
    assert M.bl_discrepancy(M.marginal_b(prod), mu_b, dic_b) <= 1e-12


def test_product_cap():
    mu = M.uniform(np.arange(10.0).reshape(-1, 1), A1)
    nu = M.uniform(np.arange(20.0).reshape(-1, 2), B2)
    with pytest.raises(ResourceLimitError):
        M.product_measure(mu, nu, max_atoms=50)


def test_exact_merge_keeps_first_occurrence():
    mu = M.AtomicMeasure(A1, [0.25, 0.25, 0.5], [[2.0], [1.0], [2.0]])
    out = M.merge_atoms(mu)
    np.testing.assert_array_equal(out.points, [[2.0], [1.0]])
    np.testing.assert_allclose(out.weights, [0.75, 0.25])


@given(seeds, st.floats(1e-6, 0.5))
@settings(max_examples=40, deadline=None)
def test_radius_merge_preserves_weight_and_mean(seed, radius):
    rng = np.random.default_rng(seed)
    mu = random_measure(rng, B2, n=30)
    out = M.merge_atoms(mu, radius)
    assert abs(out.weights.sum() - 1.0) <= 1e-12
    assert len(out) <= len(mu)
    # weight-averaged locations keep the mean
    np.testing.assert_allclose(out.weights @ out.points, mu.weights @ mu.points, atol=1e-12)


def test_radius_merge_chains():
    mu = M.uniform([[0.0], [0.1], [0.2], [1.0]], A1)
    out = M.merge_atoms(mu, 0.15)
    assert len(out) == 2
    np.testing.assert_allclose(out.points[:, 0], [0.1, 1.0])
    np.testing.assert_allclose(out.weights, [0.75, 0.25])


def test_periodic_merge_across_wrap():
    circle = M.FactorSpace(1, "B", periods=(2 * math.pi,))
    mu = M.AtomicMeasure(circle, [0.5, 0.5], [[1e-13], [2 * math.pi - 1e-13]])
    out = M.merge_atoms(mu, 1e-9)
    assert len(out) == 1
    theta = out.points[0, 0]
    assert min(theta, 2 * math.pi - theta) <= 1e-12


def test_marginal_merges_duplicates():
    prod = M.product_measure(M.uniform([[0.0], [1.0]], A1), M.dirac([3.0, 4.0], B2))
    b = M.marginal_b(prod)
    assert len(b) == 1 and b.weights[0] == 1.0
    assert b.space.factor == "B"


def test_integrate_is_linear():
    rng = np.random.default_rng(1)
    mu, nu = random_measure(rng, B2), random_measure(rng, B2)
    f = M.gaussian_functions([[0.0, 0.0]], 1.0, "B")[0]
    mix = M.convex_combine([0.3, 0.7], [mu, nu])
    assert M.integrate(mix, f) == pytest.approx(0.3 * M.integrate(mu, f) + 0.7 * M.integrate(nu, f), abs=1e-15)


def test_integrate_checks_factor():
    f = M.clamp_functions(1, "A")[0]
    with pytest.raises(DimensionError):
        M.integrate(M.dirac([0.0, 0.0], B2), f)


def test_bl_discrepancy_basics():
    rng = np.random.default_rng(2)
    mu, nu = random_measure(rng, B2), random_measure(rng, B2)
    dic = M.clamp_functions(2) + M.gaussian_functions(mu.points, 0.5)
    assert M.bl_discrepancy(mu, mu, dic) == 0.0
    assert M.bl_discrepancy(mu, nu, dic) == M.bl_discrepancy(nu, mu, dic)
    with pytest.raises(ValueError):
        M.bl_discrepancy(mu, nu, M.FunctionDictionary())


def test_convex_combine_rejects_bad_weights():
    mu = M.dirac([0.0], A1)
    with pytest.raises(ValueError):
        M.convex_combine([0.5, 0.4], [mu, mu])
    with pytest.raises(ValueError):
        M.convex_combine([1.5, -0.5], [mu, mu])


def test_tightness_profile_values():
    mu = M.AtomicMeasure(A1, [0.5, 0.25, 0.25], [[0.5], [2.0], [-5.0]])
    table = M.tightness_profile([mu], [1.0, 3.0, 10.0], [0.0])
    np.testing.assert_allclose(table, [[0.5, 0.25, 0.0]])
    with pytest.raises(ValueError):
        M.tightness_profile([mu], [3.0, 1.0], [0.0])


@given(seeds)
@settings(max_examples=30, deadline=None)
def test_tightness_is_monotone_in_radius(seed):
    rng = np.random.default_rng(seed)
    mu = random_measure(rng, B2, n=20)
    table = M.tightness_profile([mu], np.linspace(0.1, 4.0, 12), [0.0, 0.0])
    assert np.all(np.diff(table[0]) <= 0)


def test_dict_round_trip():
    space = M.ProductSpace(1, 1, "demo", periods=(None, 2 * math.pi))
    mu = M.AtomicMeasure(space, [0.25, 0.75], [[0.0, 1.0], [2.0, 3.0]])
    back = M.AtomicMeasure.from_dict(mu.to_dict())
    assert back.space == space
    np.testing.assert_array_equal(back.points, mu.points)
    np.testing.assert_array_equal(back.weights, mu.weights)


def test_stock_dictionaries():
    ang = M.angular_functions(3, "B")
    assert ang.ids == ["angBcos1", "angBsin1", "angBcos2", "angBsin2", "angBcos3", "angBsin3"]
    x = np.array([[0.0], [math.pi / 2]])
    np.testing.assert_allclose(ang[1](x), [0.0, 1.0], atol=1e-15)
    clamp = M.clamp_functions(2, scale=2.0)
    np.testing.assert_allclose(clamp[0](np.array([[10.0, 0.0], [1.0, 0.0]])), [1.0, 0.5])
    with pytest.raises(ValueError):
        M.FunctionDictionary(list(ang) + [ang[0]])
