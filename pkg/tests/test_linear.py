import numpy as np
import pytest

from gradelens.errors import ConfigError, DegenerateDesign, FeatureCountMismatch
from gradelens.models import ModelConfig, default_config
from gradelens.models.linear import fit_linear


def normal_equations_oracle(X, y, fit_intercept=True):
    """Independent closed-form reference: theta = (A^T A)^-1 A^T y."""
    A = np.hstack([X, np.ones((X.shape[0], 1))]) if fit_intercept else X
    return np.linalg.inv(A.T @ A) @ (A.T @ y)


def test_exact_line():
    X = np.array([[0.0], [1.0], [2.0]])
    y = np.array([1.0, 3.0, 5.0])
    m = fit_linear(X, y, default_config("linear", "regression"))
    assert m.weights[0] == pytest.approx(2.0, abs=1e-10)
    assert m.intercept == pytest.approx(1.0, abs=1e-10)
    assert np.allclose(m.predict(X), y, atol=1e-10)


def test_through_origin_without_intercept():
    X = np.array([[1.0], [2.0], [3.0]])
    y = 3.0 * X[:, 0]
    m = fit_linear(X, y, ModelConfig("linear", "regression", {"fit_intercept": False}))
    assert m.intercept == 0.0
    assert m.weights[0] == pytest.approx(3.0, abs=1e-12)


def test_matches_normal_equations_oracle():
    rng = np.random.default_rng(12)
    for _ in range(100):
        X = rng.standard_normal((20, 3))
        y = rng.standard_normal(20)
        m = fit_linear(X, y, default_config("linear", "regression"))
        theta = normal_equations_oracle(X, y)
        assert np.abs(m.weights - theta[:3]).max() <= 1e-8
        assert abs(m.intercept - theta[3]) <= 1e-8


def test_normal_equations_residual_invariant():
    rng = np.random.default_rng(5)
    for _ in range(20):
        X = rng.standard_normal((30, 4))
        y = rng.standard_normal(30)
        m = fit_linear(X, y, default_config("linear", "regression"))
        A = np.hstack([X, np.ones((30, 1))])
        theta = np.concatenate([m.weights, [m.intercept]])
        assert np.abs(A.T @ (A @ theta - y)).max() <= 1e-6


def test_rank_deficient_uses_minimum_norm():
    rng = np.random.default_rng(1)
    base = rng.standard_normal((15, 1))
    X = np.hstack([base, 2 * base])  # rank 1
    y = 3 * base[:, 0]
    m = fit_linear(X, y, ModelConfig("linear", "regression", {"fit_intercept": False}))
    # predictions still exact
    assert np.allclose(X @ m.weights, y, atol=1e-8)
    # minimum-norm solution of w0 + 2 w1 = 3 is (0.6, 1.2)
    assert np.allclose(m.weights, [0.6, 1.2], atol=1e-8)


def test_degenerate_design():
    with pytest.raises(DegenerateDesign):
        fit_linear(np.empty((0, 2)), np.empty(0), default_config("linear", "regression"))


def test_predict_checks_feature_count():
    m = fit_linear(np.eye(3), np.ones(3), default_config("linear", "regression"))
    with pytest.raises(FeatureCountMismatch):
        m.predict(np.ones((2, 5)))


def test_linear_only_regression():
    with pytest.raises(ConfigError):
        ModelConfig("linear", "classification")


def test_known_weights_prediction():
    from gradelens.models.linear import LinearModel

    m = LinearModel(weights=np.array([2.0, -1.0]), intercept=0.5, fitted_on=["a", "b"])
    assert m.predict(np.array([[1.0, 1.0]]))[0] == pytest.approx(1.5)
