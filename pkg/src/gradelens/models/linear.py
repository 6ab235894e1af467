"""Ordinary least squares in closed form.

The fit solves the normal equations directly; when the Gram matrix is
singular (or numerically unusable) it falls back to the SVD pseudoinverse,
which yields the minimum-norm least-squares solution.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..errors import DegenerateDesign
from . import REGRESSION, ModelConfig, check_feature_count

_RESIDUAL_TOL = 1e-8


@dataclass
class LinearModel:
    weights: np.ndarray
    intercept: float
    fitted_on: list[str]
    task: str = REGRESSION

    @property
    def n_features(self) -> int:
        return len(self.weights)

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        check_feature_count(self, X)
        return X @ self.weights + self.intercept

    def to_dict(self) -> dict:
        return {
            "weights": self.weights.tolist(),
            "intercept": float(self.intercept),
            "fitted_on": list(self.fitted_on),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LinearModel":
        return cls(
            weights=np.asarray(d["weights"], dtype=np.float64),
            intercept=float(d["intercept"]),
            fitted_on=list(d["fitted_on"]),
        )


def fit_linear(
    X, y, config: ModelConfig, feature_names: Optional[list] = None
) -> LinearModel:
    """Least-squares fit, optionally without an intercept term."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0 or X.shape[1] == 0:
        raise DegenerateDesign(f"design matrix has shape {X.shape}")
    if X.shape[0] != y.shape[0]:
        raise DegenerateDesign(
            f"X has {X.shape[0]} rows but y has {y.shape[0]} entries"
        )
    n, p = X.shape
    fit_intercept = bool(config.resolved().get("fit_intercept", True))

    A = np.hstack([X, np.ones((n, 1))]) if fit_intercept else X
    gram = A.T @ A
    rhs = A.T @ y
    theta = None
    try:
        candidate = np.linalg.solve(gram, rhs)
        residual = np.abs(gram @ candidate - rhs).max()
        scale = max(1.0, np.abs(rhs).max())
        if residual <= _RESIDUAL_TOL * scale:
            theta = candidate
    except np.linalg.LinAlgError:
        pass
    if theta is None:
        # rank-deficient: minimum-norm solution via pseudoinverse
        theta = np.linalg.pinv(A) @ y

    if fit_intercept:
        weights, intercept = theta[:p], float(theta[p])
    else:
        weights, intercept = theta, 0.0
    names = list(feature_names) if feature_names else [f"x{j}" for j in range(p)]
    return LinearModel(weights=weights, intercept=intercept, fitted_on=names)
