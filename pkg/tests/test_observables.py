import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from smd import observables as O
from smd.errors import ConfigurationError


@pytest.mark.parametrize("name", ["second_moment_1d", "mean_and_second_1d", "tanh_1d"])
def test_builtin_derivatives_match_finite_differences(name):
    ge, he = O.validate_derivatives(O.builtin(name))
    assert ge < 1e-6 and he < 1e-5


def test_identity_shapes():
    obs = O.builtin("identity_d", 3)
    X = np.arange(12.0).reshape(4, 3)
    assert obs.values(X).shape == (4, 3)
    assert np.array_equal(obs.grads(X)[2], np.eye(3))
    assert not obs.hessians(X).any()


def test_point_methods():
    obs = O.builtin("mean_and_second_1d")
    assert np.allclose(obs.f([1.5]), [1.5, 2.25])
    assert np.allclose(obs.grad_f([1.5]), [[1.0, 3.0]])
    assert np.allclose(obs.hess_fk([1.5], 1), [[2.0]])
    assert np.allclose(obs.hess_fk([1.5], 0), [[0.0]])


def test_tanh_derivatives_in_tails():
    obs = O.builtin("tanh_1d")
    g = obs.grad_f([30.0])[0, 0]
    assert g > 0 and np.isclose(g, 4 * np.exp(-60.0), rtol=1e-12)


def test_alpha_and_beta():
    assert O.alpha_of(O.builtin("second_moment_1d")) == 2.0
    assert O.alpha_of(O.builtin("tanh_1d")) == 2.0
    g = O.polynomial(3, 2, 1)
    assert O.alpha_of(g) == max(4.0, 8.0)
    assert O.grad_growth_beta(O.builtin("second_moment_1d")) == 1.0
    assert O.grad_growth_beta(O.builtin("tanh_1d")) == 0.0


def test_unknown_builtin_names_field():
    with pytest.raises(ConfigurationError, match="observable.name"):
        O.builtin("cubic")
    with pytest.raises(ConfigurationError, match="observable.d"):
        O.builtin("tanh_1d", d=2)


def test_custom_rejects_wrong_gradient():
    with pytest.raises(ConfigurationError, match="gradient"):
        O.from_pointwise(
            lambda x: [x[0] ** 3],
            lambda x: [[2.0 * x[0]]],
            lambda x: [[[6.0 * x[0]]]],
            1, 1, O.polynomial(2, 1, 0),
        )


def test_custom_accepts_consistent_observable():
    obs = O.from_pointwise(
        lambda x: [np.sin(x[0])], lambda x: [[np.cos(x[0])]], lambda x: [[[-np.sin(x[0])]]], 1, 1, O.BOUNDED
    )
    assert obs.values(np.zeros((2, 1))).shape == (2, 1)


def test_growth_validation():
    with pytest.raises(ConfigurationError):
        O.Growth("exponential")
    with pytest.raises(ConfigurationError):
        O.polynomial(-1, 0, 0)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=1, max_size=20))
def test_batched_and_pointwise_agree(xs):
    obs = O.builtin("mean_and_second_1d")
    X = np.array(xs)[:, None]
    V = obs.values(X)
    for i, x in enumerate(xs):
        assert np.array_equal(V[i], obs.f([x]))
