"""Model families behind one train/predict interface.

Four families, six models: linear regression, logistic classification, and
decision tree / random forest in both classifier and regressor form. Every
trainer takes a validated ModelConfig and a numeric matrix; classifiers
return positive-class probabilities plus hard labels at the 0.5 cutoff,
regressors return values on the normalized grade scale.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import ceil, isqrt
from typing import Optional

import numpy as np

from ..errors import ConfigError, FeatureCountMismatch

LINEAR = "linear"
LOGISTIC = "logistic"
TREE = "tree"
FOREST = "forest"

CLASSIFICATION = "classification"
REGRESSION = "regression"

FAMILIES = (LINEAR, LOGISTIC, TREE, FOREST)
TASKS = (CLASSIFICATION, REGRESSION)

# Canonical hyperparameter names per family; configs and artifacts may use
# no others.
CANONICAL_PARAMS = {
    LINEAR: ("fit_intercept",),
    LOGISTIC: ("C", "max_iter"),
    TREE: ("max_depth", "min_samples_split", "min_samples_leaf", "max_features"),
    FOREST: (
        "n_estimators",
        "bootstrap",
        "max_depth",
        "min_samples_split",
        "min_samples_leaf",
        "max_features",
    ),
}

_TREE_DEFAULTS = {
    "max_depth": None,
    "min_samples_split": 2,
    "min_samples_leaf": 1,
    "max_features": "all",
}


def default_hyperparameters(family: str, task: str) -> dict:
    """Library-default hyperparameters for the family/task pair."""
    if family == LINEAR:
        return {"fit_intercept": True}
    if family == LOGISTIC:
        return {"C": 1.0, "max_iter": 100}
    if family == TREE:
        return dict(_TREE_DEFAULTS)
    if family == FOREST:
        # 'auto' in older library generations: sqrt for classification
        # forests, all features for regression forests.
        return {
            "n_estimators": 100,
            "bootstrap": True,
            **_TREE_DEFAULTS,
            "max_features": "sqrt" if task == CLASSIFICATION else "all",
        }
    raise ConfigError(f"unknown family {family!r}")


@dataclass(frozen=True)
class ModelConfig:
    """Family + task + hyperparameters (+ seed for stochastic families)."""

    family: str
    task: str
    hyperparameters: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigError(f"unknown family {self.family!r}")
        if self.task not in TASKS:
            raise ConfigError(f"unknown task {self.task!r}")
        if self.family == LINEAR and self.task != REGRESSION:
            raise ConfigError("linear regression only supports the regression task")
        if self.family == LOGISTIC and self.task != CLASSIFICATION:
            raise ConfigError("logistic regression only supports the classification task")
        allowed = set(CANONICAL_PARAMS[self.family])
        unknown = set(self.hyperparameters) - allowed
        if unknown:
            raise ConfigError(
                f"{self.family}: unknown hyperparameters {sorted(unknown)}; "
                f"canonical set is {sorted(allowed)}"
            )

    def resolved(self) -> dict:
        """Hyperparameters with family/task defaults filled in."""
        params = default_hyperparameters(self.family, self.task)
        params.update(self.hyperparameters)
        return params

    def with_seed(self, seed: int) -> "ModelConfig":
        return ModelConfig(self.family, self.task, dict(self.hyperparameters), seed)

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "task": self.task,
            "hyperparameters": dict(self.hyperparameters),
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        return cls(d["family"], d["task"], dict(d.get("hyperparameters", {})), int(d.get("seed", 0)))


def default_config(family: str, task: str, seed: int = 0) -> ModelConfig:
    return ModelConfig(family, task, default_hyperparameters(family, task), seed)


def resolve_max_features(max_features, n_features: int) -> int:
    """Number of features drawn at each split: sqrt | all | fraction."""
    if max_features in (None, "all"):
        return n_features
    if max_features == "sqrt":
        k = isqrt(n_features)
        if k * k < n_features:
            k += 1
        return max(1, k)
    frac = float(max_features)
    if not 0.0 < frac <= 1.0:
        raise ConfigError(f"max_features fraction must be in (0, 1], got {frac}")
    return max(1, ceil(frac * n_features))


def check_feature_count(model, X: np.ndarray):
    if X.ndim != 2 or X.shape[1] != model.n_features:
        got = X.shape[1] if X.ndim == 2 else None
        raise FeatureCountMismatch(
            f"model fitted on {model.n_features} features, input has {got}"
        )


def fit(config: ModelConfig, X, y, feature_names: Optional[list] = None):
    """Train the configured model; dispatches to the family trainer."""
    from .forest import fit_forest
    from .linear import fit_linear
    from .logistic import fit_logistic
    from .tree import fit_tree

    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if config.family == LINEAR:
        return fit_linear(X, y, config, feature_names)
    if config.family == LOGISTIC:
        return fit_logistic(X, y, config, feature_names)
    if config.family == TREE:
        return fit_tree(X, y, config, feature_names)
    return fit_forest(X, y, config, feature_names)


def predict(model, X):
    """Uniform inference: (probabilities, labels) or regression values.

    Classification models yield per-row positive-class probability and the
    hard label at the 0.5 cutoff (>= resolves the boundary to pass).
    """
    X = np.asarray(X, dtype=np.float64)
    if getattr(model, "task", REGRESSION) == CLASSIFICATION:
        proba = model.predict_proba(X)
        return proba, (proba >= 0.5).astype(np.int64)
    return model.predict(X)
