import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dctc import measures as M
from dctc import operations as O
from dctc.errors import DimensionError

seeds = st.integers(min_value=0, max_value=2**32 - 1)
CIRCLE = M.FactorSpace(1, "B", periods=(2 * math.pi,))
PLANE = M.FactorSpace(2)


def random_measure(rng, space, n=None):
    n = n or int(rng.integers(1, 8))
    w = rng.random(n) + 0.05
    pts = rng.uniform(0, 2 * math.pi, size=(n, space.dim))
    return M.AtomicMeasure(space, w / w.sum(), pts)


def test_parse_angle():
    assert O.parse_angle("1/4") == pytest.approx(math.pi / 2)
    assert O.parse_angle("golden") == pytest.approx(2 * math.pi * (math.sqrt(5) - 1) / 2)
    assert O.parse_angle(0.5) == 0.5
    assert O.parse_angle("0.5") == 0.5
    assert O.parse_angle(Fraction(1, 3)) == pytest.approx(2 * math.pi / 3)


@pytest.mark.parametrize("k,l", [(1, 4), (3, 7), (2, 5), (5, 12)])
def test_rational_rotation_has_period_l(k, l):
    rot = O.circle_rotation(O.parse_angle(f"{k}/{l}"))
    x0 = np.array([[0.3], [1.7], [6.0]])
    x = x0
    for _ in range(l):
        x = rot(x)
    d = np.abs(x - x0)
    assert np.all(np.minimum(d, 2 * math.pi - d) <= 1e-12)


def test_rotation_stays_in_range():
    rot = O.circle_rotation(O.parse_angle("golden"))
    x = np.array([[0.0]])
    for _ in range(1000):
        x = rot(x)
        assert 0.0 <= x[0, 0] < 2 * math.pi


def test_phase_map_checks_dimension():
    with pytest.raises(DimensionError):
        O.translation([1.0, 2.0])(np.zeros((3, 3)))


def test_pushforward_on_b_leaves_a():
    space = M.ProductSpace(1, 1)
    mu = M.AtomicMeasure(space, [0.5, 0.5], [[1.0, 0.0], [2.0, 1.0]])
    out = O.Pushforward(O.translation([0.5]), on="B").apply(mu)
    np.testing.assert_array_equal(out.points[:, 0], mu.points[:, 0])
    np.testing.assert_array_equal(out.points[:, 1], [0.5, 1.5])
    np.testing.assert_array_equal(out.weights, mu.weights)


def test_pushforward_rejects_non_finite():
    bad = O.PhaseMap("blowup", 1, lambda x: x / 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        with pytest.raises(ValueError, match="non-finite"):
            O.Pushforward(bad).apply(M.uniform([[0.0], [1.0]], M.FactorSpace(1)))


@pytest.mark.parametrize("lam", [0.1, 0.5, 0.9])
def test_mixing_geometric_series(lam):
    # tau^n(mu) = (1 - (1-lam)^n) w0 + (1-lam)^n mu when supports are disjoint
    w0 = M.dirac([0.0, 0.0], PLANE)
    mu = M.dirac([1.0, 1.0], PLANE)
    op = O.MixWithFixed(w0, lam)
    states = O.iterate(op, mu, 12)
    for n, s in enumerate(states):
        assert len(s) == (1 if n == 0 else 2)
        mass_mu = s.weights[np.all(s.points == 1.0, axis=1)].sum()
        assert mass_mu == pytest.approx((1 - lam) ** n, abs=1e-14)


def test_mixing_rejects_bad_lambda():
    with pytest.raises(ValueError):
        O.MixWithFixed(M.dirac([0.0, 0.0], PLANE), 1.5)


def test_compose_is_left_to_right():
    shift = O.Pushforward(O.translation([1.0]))
    double = O.Pushforward(O.PhaseMap("double", 1, lambda x: 2 * x))
    mu = M.dirac([1.0], M.FactorSpace(1))
    assert O.Compose([shift, double]).apply(mu).points[0, 0] == 4.0
    assert O.Compose([double, shift]).apply(mu).points[0, 0] == 3.0


def test_iterate_length():
    mu = M.dirac([0.0], M.FactorSpace(1))
    assert len(O.iterate(O.Pushforward(O.translation([1.0])), mu, 5)) == 6
    with pytest.raises(ValueError):
        O.iterate(O.Pushforward(O.translation([1.0])), mu, -1)


def _ops():
    w0 = M.AtomicMeasure(CIRCLE, [0.5, 0.5], [[1.0], [4.0]])
    rot = O.Pushforward(O.circle_rotation(O.parse_angle("golden")))
    return {
        "rotation": rot,
        "translation": O.Pushforward(O.translation([0.25])),
        "mix": O.MixWithFixed(w0, 0.3),
        "compose": O.Compose([rot, O.MixWithFixed(w0, 0.6)]),
    }


@pytest.mark.parametrize("kind", ["rotation", "translation", "mix", "compose"])
@given(seed=seeds, lam=st.floats(0.0, 1.0))
@settings(max_examples=30, deadline=None)
def test_convexity(kind, seed, lam):
    rng = np.random.default_rng(seed)
    samples = [random_measure(rng, CIRCLE) for _ in range(3)]
    dic = M.angular_functions(4, "B") + M.clamp_functions(1, "B", scale=3.0)
    dic = M.FunctionDictionary(M.BoundedFunction(f.id, f.bound, f.fn, "full") for f in dic)
    assert O.convexity_check(_ops()[kind], samples, lam, dic) <= 1e-12
