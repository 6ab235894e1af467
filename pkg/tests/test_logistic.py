import numpy as np
import pytest

from gradelens.errors import ConfigError, NonBinaryLabels, SingleClassTraining
from gradelens.models import ModelConfig, default_config
from gradelens.models.logistic import fit_logistic, logistic_objective


def finite_difference_gradient(weights, intercept, X, y, C, step=1e-6):
    theta = np.concatenate([weights, [intercept]])
    grad = np.empty_like(theta)
    for j in range(len(theta)):
        up, down = theta.copy(), theta.copy()
        up[j] += step
        down[j] -= step
        lu, _ = logistic_objective(up[:-1], up[-1], X, y, C)
        ld, _ = logistic_objective(down[:-1], down[-1], X, y, C)
        grad[j] = (lu - ld) / (2 * step)
    return grad


def test_zero_weights_loss_is_n_log2():
    X = np.random.default_rng(0).standard_normal((17, 3))
    y = (np.arange(17) % 2).astype(float)
    loss, _ = logistic_objective(np.zeros(3), 0.0, X, y, C=1.0)
    assert loss == pytest.approx(17 * np.log(2), rel=1e-12)


def test_huge_C_kills_penalty():
    X = np.random.default_rng(1).standard_normal((10, 2))
    y = (np.arange(10) % 2).astype(float)
    w = np.array([0.7, -1.3])
    loss_pen, _ = logistic_objective(w, 0.1, X, y, C=1e12)
    loss_ref = float(np.sum(np.logaddexp(0.0, -(2 * y - 1) * (X @ w + 0.1))))
    assert abs(loss_pen - loss_ref) < 1e-9 * float(w @ w)


def test_gradient_matches_finite_differences():
    rng = np.random.default_rng(42)
    for _ in range(100):
        n, p = rng.integers(3, 12), rng.integers(1, 4)
        X = rng.standard_normal((n, p))
        y = rng.integers(0, 2, n).astype(float)
        if len(set(y.tolist())) < 2:
            y[0] = 1 - y[0]
        w = rng.standard_normal(p)
        b = float(rng.standard_normal())
        C = float(10 ** rng.uniform(-2, 2))
        _, grad = logistic_objective(w, b, X, y, C)
        fd = finite_difference_gradient(w, b, X, y, C)
        denom = max(1.0, np.abs(fd).max())
        assert np.abs(grad - fd).max() / denom <= 1e-5


def test_non_binary_labels():
    with pytest.raises(NonBinaryLabels):
        logistic_objective(np.zeros(1), 0.0, np.ones((3, 1)), np.array([0.0, 1.0, 2.0]), 1.0)


def test_separable_1d_perfect_training_accuracy():
    X = np.array([[0.0], [0.1], [0.9], [1.0]])
    y = np.array([0.0, 0.0, 1.0, 1.0])
    m = fit_logistic(X, y, ModelConfig("logistic", "classification", {"C": 10.0}))
    assert (m.predict(X) == y).all()


def test_symmetric_data_gives_half_probability():
    X = np.array([[-1.0], [1.0], [-2.0], [2.0]])
    y = np.array([0.0, 1.0, 0.0, 1.0])
    m = fit_logistic(X, y, default_config("logistic", "classification"))
    assert abs(m.intercept) < 1e-3
    assert m.predict_proba(np.array([[0.0]]))[0] == pytest.approx(0.5, abs=1e-3)


def test_constant_feature_balanced_gives_half():
    X = np.ones((8, 1))
    y = np.array([0.0, 1.0] * 4)
    m = fit_logistic(X, y, default_config("logistic", "classification"))
    proba = m.predict_proba(X)
    assert np.allclose(proba, 0.5, atol=1e-4)


def test_loss_curve_non_increasing():
    rng = np.random.default_rng(3)
    X = rng.standard_normal((60, 4))
    y = (X @ rng.standard_normal(4) + 0.3 * rng.standard_normal(60) > 0).astype(float)
    m = fit_logistic(X, y, default_config("logistic", "classification"))
    diffs = np.diff(m.loss_curve)
    assert (diffs <= 1e-12).all()


def test_single_class_raises():
    with pytest.raises(SingleClassTraining):
        fit_logistic(np.ones((5, 1)), np.ones(5), default_config("logistic", "classification"))


def test_cap_returns_best_iterate_flagged():
    rng = np.random.default_rng(9)
    X = rng.standard_normal((80, 5))
    y = (X @ rng.standard_normal(5) > 0).astype(float)
    m = fit_logistic(X, y, ModelConfig("logistic", "classification", {"max_iter": 1}))
    assert m.n_iter <= 1
    assert m.converged is False
    assert np.isfinite(m.weights).all()


def test_probabilities_strictly_inside_unit_interval():
    X = np.array([[1000.0], [-1000.0]])
    y = np.array([1.0, 0.0])
    m = fit_logistic(X, y, ModelConfig("logistic", "classification", {"C": 100.0}))
    proba = m.predict_proba(X)
    assert (proba > 0.0).all() and (proba < 1.0).all()


def test_logistic_only_classification():
    with pytest.raises(ConfigError):
        ModelConfig("logistic", "regression")
