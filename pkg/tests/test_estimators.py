import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError
from sklearn.pipeline import make_pipeline

from grushin import PseudoMultiplier
from grushin.symbols import power_decay

SMALL = dict(K=8, Lam=4, M2=16, L2=16.0)


@pytest.fixture(scope="module")
def fitted():
    return PseudoMultiplier(**SMALL).fit()


def test_params_roundtrip_through_clone():
    est = PseudoMultiplier(symbol="power-decay", symbol_params={"a": 0.5}, mode="sqrtG", **SMALL)
    params = est.get_params()
    assert params["symbol"] == "power-decay" and params["K"] == 8
    twin = clone(est)
    assert twin.get_params() == params
    assert not hasattr(twin, "operator_")


def test_identity_transform_keeps_band_samples(fitted):
    X = fitted.random_band_samples(3, seed=4)
    assert X.shape == (3, fitted.n_features_in_)
    assert np.max(np.abs(fitted.transform(X) - X)) <= 1e-12 * np.max(np.abs(X))


def test_transform_matches_operator(fitted):
    est = PseudoMultiplier(symbol=power_decay(1.0), **SMALL).fit()
    X = est.random_band_samples(2, seed=1)
    op = est.operator_
    expected = op.apply_array(X.reshape((2,) + est.disc_.grid_shape)).reshape(2, -1)
    assert np.array_equal(est.transform(X), expected)


def test_adjoint_transform(fitted):
    est = PseudoMultiplier(symbol="sinusoidal-x", symbol_params={"eps": 0.3}, **SMALL).fit()
    X = est.random_band_samples(2, seed=2)
    Y = est.random_band_samples(2, seed=3)
    shape = (2,) + est.disc_.grid_shape
    lhs = est.disc_.inner(est.transform(X).reshape(shape), Y.reshape(shape))
    rhs = est.disc_.inner(X.reshape(shape), est.adjoint_transform(Y).reshape(shape))
    assert np.allclose(lhs, rhs, rtol=1e-10, atol=0)


def test_joint_constant_builtin():
    est = PseudoMultiplier(mode="joint", **SMALL).fit()
    X = est.random_band_samples(1)
    assert np.max(np.abs(est.transform(X) - X)) <= 1e-12 * np.max(np.abs(X))


def test_not_fitted():
    with pytest.raises(NotFittedError):
        PseudoMultiplier(**SMALL).transform(np.zeros((1, 4)))


@pytest.mark.parametrize("X", [np.zeros(10), np.zeros((2, 5)), np.array([["a"] * 5])])
def test_invalid_samples(fitted, X):
    with pytest.raises(ValueError):
        fitted.transform(X)


def test_non_finite_samples(fitted):
    X = np.zeros((1, fitted.n_features_in_), dtype=complex)
    X[0, 3] = np.nan
    with pytest.raises(ValueError):
        fitted.transform(X)


def test_complex_input_is_accepted(fitted):
    X = fitted.random_band_samples(1)
    assert np.iscomplexobj(X)
    assert fitted.transform(X).dtype == complex


def test_pipeline_composition(fitted):
    X = fitted.random_band_samples(2)
    pipe = make_pipeline(PseudoMultiplier(symbol="power-decay", symbol_params={"a": 1.0}, **SMALL),
                         PseudoMultiplier(**SMALL))
    out = pipe.fit_transform(X)
    first = pipe.steps[0][1]
    assert np.allclose(out, first.transform(X), rtol=0, atol=1e-12)
