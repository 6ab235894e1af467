"""gradelens: dual-task student performance prediction.

One preprocessing pipeline feeding parallel pass/fail classification and
continuous grade regression, with grid-search tuning, a repeated-run
evaluation protocol, risk scoring for early intervention, a CLI, and a
small HTTP service for the teacher dashboard.
"""

__version__ = "0.1.0"

from .evaluation import classification_metrics, kfold_indices, regression_metrics
from .models import ModelConfig, default_config, fit, predict
from .preprocess import (
    DataMatrix,
    NormParams,
    SelectionConfig,
    derive_labels,
    encode_and_normalize,
    impute,
    pearson,
    select_features,
    split,
)
from .risk import RiskConfig, RiskScore, score_student, top_contributions
from .tuning import ParamGrid, expand_grid, grid_search

__all__ = [
    "ModelConfig",
    "DataMatrix",
    "NormParams",
    "SelectionConfig",
    "ParamGrid",
    "RiskConfig",
    "RiskScore",
    "classification_metrics",
    "regression_metrics",
    "kfold_indices",
    "default_config",
    "derive_labels",
    "encode_and_normalize",
    "expand_grid",
    "fit",
    "grid_search",
    "impute",
    "pearson",
    "predict",
    "score_student",
    "select_features",
    "split",
    "top_contributions",
]
