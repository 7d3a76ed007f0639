import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import wasserstein_distance

from smd import measures as Mz
from smd import observables as O
from smd.errors import ConfigurationError, UnsupportedDimension

finite = st.floats(-100, 100, allow_nan=False)


def test_measure_is_read_only_copy():
    x = np.array([1.0, 2.0])
    m = Mz.EmpiricalMeasure(x)
    x[0] = 5.0
    assert m.positions[0, 0] == 1.0
    with pytest.raises(ValueError):
        m.positions[0, 0] = 3.0


def test_rejects_empty_and_nan():
    with pytest.raises(ConfigurationError):
        Mz.EmpiricalMeasure(np.zeros((0, 1)))
    with pytest.raises(ConfigurationError):
        Mz.EmpiricalMeasure([np.nan])


def test_f_moment_and_gram():
    pi = [[-1.0], [1.0], [2.0]]
    obs = O.builtin("mean_and_second_1d")
    assert np.allclose(Mz.f_moment(pi, obs), [2 / 3, 2.0])
    # G = mean [[1, 2x], [2x, 4x^2]]
    assert np.allclose(Mz.gram(pi, obs), [[1.0, 4 / 3], [4 / 3, 8.0]])


def test_poly_moment():
    assert np.isclose(Mz.poly_moment([[3.0], [-1.0]], 2), 5.0)
    assert np.isclose(Mz.poly_moment([[3.0, 4.0]], 1), 5.0)
    with pytest.raises(ConfigurationError):
        Mz.poly_moment([[1.0]], 0.5)


def test_wasserstein_examples():
    assert Mz.wasserstein_1d(2, [[0.0]], [[-1.0]]) == 1.0
    assert np.isclose(Mz.wasserstein_1d(1, [[0.0], [1.0]], [[0.0], [1.0], [2.0], [3.0]]), 1.0)
    with pytest.raises(UnsupportedDimension):
        Mz.wasserstein_1d(2, [[0.0, 1.0]], [[0.0, 1.0]])


@settings(max_examples=60, deadline=None)
@given(st.lists(finite, min_size=1, max_size=15), st.lists(finite, min_size=1, max_size=15))
def test_w1_matches_scipy(a, b):
    ours = Mz.wasserstein_1d(1, np.array(a), np.array(b))
    assert np.isclose(ours, wasserstein_distance(a, b), rtol=1e-9, atol=1e-9)


@settings(max_examples=60, deadline=None)
@given(st.lists(finite, min_size=1, max_size=12), st.lists(finite, min_size=1, max_size=12),
       st.lists(finite, min_size=1, max_size=12))
def test_w2_metric_properties(a, b, c):
    d = lambda u, v: Mz.wasserstein_1d(2, np.array(u), np.array(v))  # noqa: E731
    assert d(a, a) == 0.0
    assert np.isclose(d(a, b), d(b, a), rtol=1e-12, atol=1e-12)
    assert d(a, c) <= d(a, b) + d(b, c) + 1e-9


@settings(max_examples=40, deadline=None)
@given(st.lists(finite, min_size=2, max_size=30))
def test_jensen_gram_determinant_nonnegative(xs):
    G = Mz.gram(np.array(xs), O.builtin("mean_and_second_1d"))
    # det G = 4 Var >= 0
    assert G[0, 0] * G[1, 1] - G[0, 1] ** 2 >= -1e-9 * max(1.0, G[1, 1])
