"""Per-student risk scoring from a trained classifier/regressor pair.

A RiskScore combines the failure probability (1 - pass probability), a flag
against the intervention threshold (strictly greater than, so exactly 0.70
is not flagged), the denormalized predicted grade clamped to the grade
scale, and the top contributing features. Linear models contribute signed
per-feature terms w_j * x_j; trees and forests contribute their global
impurity-decrease importances, normalized to sum to 1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import FeatureCountMismatch, ModelPairMismatch, UnsupportedModel
from .models.forest import ForestModel
from .models.linear import LinearModel
from .models.logistic import LogisticModel
from .models.tree import TreeModel
from .preprocess import NormParams

DEFAULT_THRESHOLD = 0.70
DEFAULT_TOP_K = 3


@dataclass(frozen=True)
class RiskConfig:
    threshold: float = DEFAULT_THRESHOLD
    top_k: int = DEFAULT_TOP_K

    def __post_init__(self):
        if not 0.0 < self.threshold < 1.0:
            raise ValueError(f"threshold must be in (0, 1), got {self.threshold}")
        if self.top_k < 0:
            raise ValueError("top_k must be >= 0")


@dataclass
class RiskScore:
    student_id: str
    p_fail: float
    flagged: bool
    predicted_grade: float
    contributions: list[tuple[str, float]]

    def to_dict(self) -> dict:
        return {
            "student_id": self.student_id,
            "p_fail": self.p_fail,
            "flagged": self.flagged,
            "predicted_grade": self.predicted_grade,
            "contributions": [
                {"feature": name, "value": value} for name, value in self.contributions
            ],
        }


def denormalize_grade(value: float, norm: NormParams) -> float:
    """Inverse of target normalization, clamped to the grade scale."""
    return norm.denormalize_grade(value)


def top_contributions(model, x, k: int) -> list[tuple[str, float]]:
    """Top-k features by |contribution|, ties broken by feature index.

    Linear and logistic models decompose their raw score exactly into
    w_j * x_j terms (signed). Tree and forest models report global
    impurity-decrease importances (unsigned, summing to 1 when any split
    occurred); per-instance attribution is out of scope for them.
    """
    x = np.asarray(x, dtype=np.float64)
    if isinstance(model, (LinearModel, LogisticModel)):
        if x.shape[0] != model.n_features:
            raise FeatureCountMismatch(
                f"expected {model.n_features} features, got {x.shape[0]}"
            )
        values = model.weights * x
    elif isinstance(model, (TreeModel, ForestModel)):
        if x.shape[0] != model.n_features:
            raise FeatureCountMismatch(
                f"expected {model.n_features} features, got {x.shape[0]}"
            )
        values = model.importances()
    else:
        raise UnsupportedModel(f"no contribution rule for {type(model).__name__}")
    order = sorted(range(len(values)), key=lambda j: (-abs(values[j]), j))
    return [(model.fitted_on[j], float(values[j])) for j in order[:k]]


def score_student(
    x,
    student_id: str,
    classifier,
    regressor,
    norm: NormParams,
    cfg: RiskConfig = RiskConfig(),
) -> RiskScore:
    """Risk score for one normalized feature vector."""
    if list(classifier.fitted_on) != list(regressor.fitted_on):
        raise ModelPairMismatch(
            "classifier and regressor were trained on different feature sets"
        )
    x = np.asarray(x, dtype=np.float64)
    if x.shape[0] != classifier.n_features:
        raise FeatureCountMismatch(
            f"expected {classifier.n_features} features, got {x.shape[0]}"
        )
    p_pass = float(classifier.predict_proba(x.reshape(1, -1))[0])
    p_fail = 1.0 - p_pass
    raw_grade = float(np.asarray(regressor.predict(x.reshape(1, -1))).ravel()[0])
    return RiskScore(
        student_id=student_id,
        p_fail=p_fail,
        flagged=p_fail > cfg.threshold,
        predicted_grade=denormalize_grade(raw_grade, norm),
        contributions=top_contributions(classifier, x, cfg.top_k),
    )


def score_roster(
    X,
    student_ids,
    classifier,
    regressor,
    norm: NormParams,
    cfg: RiskConfig = RiskConfig(),
) -> list[RiskScore]:
    """Score every row; result sorted by descending failure probability."""
    scores = [
        score_student(X[i], str(student_ids[i]), classifier, regressor, norm, cfg)
        for i in range(len(student_ids))
    ]
    scores.sort(key=lambda s: (-s.p_fail, s.student_id))
    return scores
