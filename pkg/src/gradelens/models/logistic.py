"""L2-regularized logistic regression.

The objective is sum_i log(1 + exp(-s_i (w.x_i + b))) + ||w||^2 / (2C) with
s_i = 2 y_i - 1 and an unpenalized intercept. The optimizer is L-BFGS with
Armijo backtracking; any gradient-based method reaching gradient inf-norm
<= 1e-6 within the iteration cap satisfies the same contract. Hitting the
cap is not an error: the best iterate is returned flagged converged=False,
matching the library defaults the baseline tables were produced with.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..errors import DegenerateDesign, NonBinaryLabels, SingleClassTraining
from . import CLASSIFICATION, ModelConfig, check_feature_count

GRAD_TOL = 1e-6
_LBFGS_MEMORY = 10
_ARMIJO_C1 = 1e-4
_ARMIJO_SHRINK = 0.5
_ARMIJO_MAX_STEPS = 40
_PROB_EPS = 1e-15


def logistic_objective(weights, intercept, X, y, C):
    """Loss and exact analytic gradient of the penalized log-loss.

    Returns (loss, gradient) where the gradient stacks d/dw (length p) and
    d/db as its last entry. The intercept carries no penalty.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    w = np.asarray(weights, dtype=np.float64)
    if not np.all((y == 0.0) | (y == 1.0)):
        raise NonBinaryLabels("labels must be 0 or 1")
    if C <= 0:
        raise ValueError("C must be positive")
    z = X @ w + intercept
    s = 2.0 * y - 1.0
    # log(1 + exp(-s z)) computed stably
    loss = float(np.sum(np.logaddexp(0.0, -s * z)) + 0.5 * np.dot(w, w) / C)
    p = _sigmoid(z)
    residual = p - y
    grad_w = X.T @ residual + w / C
    grad_b = float(np.sum(residual))
    return loss, np.concatenate([grad_w, [grad_b]])


def _sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


@dataclass
class LogisticModel:
    weights: np.ndarray
    intercept: float
    C: float
    fitted_on: list[str]
    converged: bool = True
    n_iter: int = 0
    loss_curve: list[float] = field(default_factory=list)
    task: str = CLASSIFICATION

    @property
    def n_features(self) -> int:
        return len(self.weights)

    def predict_proba(self, X) -> np.ndarray:
        """Probability of the positive (pass) class, clipped into (0, 1)."""
        X = np.asarray(X, dtype=np.float64)
        check_feature_count(self, X)
        return np.clip(_sigmoid(X @ self.weights + self.intercept), _PROB_EPS, 1.0 - _PROB_EPS)

    def predict(self, X) -> np.ndarray:
        return (self.predict_proba(X) >= 0.5).astype(np.int64)

    def to_dict(self) -> dict:
        return {
            "weights": self.weights.tolist(),
            "intercept": float(self.intercept),
            "C": float(self.C),
            "fitted_on": list(self.fitted_on),
            "converged": bool(self.converged),
            "n_iter": int(self.n_iter),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LogisticModel":
        return cls(
            weights=np.asarray(d["weights"], dtype=np.float64),
            intercept=float(d["intercept"]),
            C=float(d["C"]),
            fitted_on=list(d["fitted_on"]),
            converged=bool(d.get("converged", True)),
            n_iter=int(d.get("n_iter", 0)),
        )


def fit_logistic(
    X, y, config: ModelConfig, feature_names: Optional[list] = None
) -> LogisticModel:
    """Minimize the penalized log-loss from a zero start.

    L-BFGS two-loop recursion with Armijo backtracking; the line search
    guarantees the recorded loss curve is strictly non-increasing.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0 or X.shape[1] == 0:
        raise DegenerateDesign(f"design matrix has shape {X.shape}")
    classes = np.unique(y)
    if not set(classes.tolist()) <= {0.0, 1.0}:
        raise NonBinaryLabels(f"labels must be 0/1, got {classes}")
    if len(classes) < 2:
        raise SingleClassTraining("training data contains a single class")
    params = config.resolved()
    C = float(params["C"])
    max_iter = int(params["max_iter"])
    n, p = X.shape

    def objective(theta):
        return logistic_objective(theta[:p], theta[p], X, y, C)

    theta = np.zeros(p + 1)
    loss, grad = objective(theta)
    loss_curve = [loss]
    s_hist: list[np.ndarray] = []
    y_hist: list[np.ndarray] = []
    converged = False
    it = 0
    while it < max_iter:
        if np.abs(grad).max() <= GRAD_TOL:
            converged = True
            break
        direction = _lbfgs_direction(grad, s_hist, y_hist)
        if np.dot(direction, grad) >= 0:  # not a descent direction: reset
            s_hist.clear()
            y_hist.clear()
            direction = -grad
        step, new_theta, new_loss, new_grad = _armijo(
            objective, theta, loss, grad, direction
        )
        if step is None:
            # try plain steepest descent before giving up
            step, new_theta, new_loss, new_grad = _armijo(
                objective, theta, loss, grad, -grad
            )
            if step is None:
                break
        s_hist.append(new_theta - theta)
        y_hist.append(new_grad - grad)
        if len(s_hist) > _LBFGS_MEMORY:
            s_hist.pop(0)
            y_hist.pop(0)
        theta, loss, grad = new_theta, new_loss, new_grad
        loss_curve.append(loss)
        it += 1
    else:
        converged = bool(np.abs(grad).max() <= GRAD_TOL)

    names = list(feature_names) if feature_names else [f"x{j}" for j in range(p)]
    return LogisticModel(
        weights=theta[:p],
        intercept=float(theta[p]),
        C=C,
        fitted_on=names,
        converged=converged,
        n_iter=it,
        loss_curve=loss_curve,
    )


def _lbfgs_direction(grad, s_hist, y_hist):
    q = -grad.copy()
    if not s_hist:
        return q
    alphas = []
    rhos = []
    for s, yv in zip(reversed(s_hist), reversed(y_hist)):
        sy = float(np.dot(s, yv))
        if sy <= 1e-12:
            rhos.append(None)
            alphas.append(0.0)
            continue
        rho = 1.0 / sy
        a = rho * float(np.dot(s, q))
        q -= a * yv
        rhos.append(rho)
        alphas.append(a)
    s_last, y_last = s_hist[-1], y_hist[-1]
    yy = float(np.dot(y_last, y_last))
    gamma = float(np.dot(s_last, y_last)) / yy if yy > 0 else 1.0
    q *= gamma
    for (s, yv), rho, a in zip(zip(s_hist, y_hist), reversed(rhos), reversed(alphas)):
        if rho is None:
            continue
        b = rho * float(np.dot(yv, q))
        q += (a - b) * s
    return q


def _armijo(objective, theta, loss, grad, direction):
    slope = float(np.dot(grad, direction))
    if slope >= 0:
        return None, None, None, None
    step = 1.0
    for _ in range(_ARMIJO_MAX_STEPS):
        trial = theta + step * direction
        trial_loss, trial_grad = objective(trial)
        if trial_loss <= loss + _ARMIJO_C1 * step * slope:
            return step, trial, trial_loss, trial_grad
        step *= _ARMIJO_SHRINK
    return None, None, None, None
