"""Metric suites, k-fold machinery, and the repeated-run protocol.

Classification reports Accuracy/Precision/Recall/F1 over a TP/FP/TN/FN
confusion count; regression reports MAE/MSE/RMSE/R2. Zero-denominator cases
return 0 with a ``degenerate`` flag instead of raising, so cross-validation
never aborts on a pathological fold. Aggregates over repetitions store every
per-run bundle plus mean and sample (n-1) standard deviation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import BadK, LengthMismatch
from .models import CLASSIFICATION, ModelConfig, fit
from .prng import SplitMix64

DEFAULT_REPETITIONS = 10


@dataclass
class ClsMetrics:
    accuracy: float
    precision: float
    recall: float
    f1: float
    confusion: tuple[int, int, int, int]  # (TP, FP, TN, FN)
    degenerate: bool = False

    def to_dict(self) -> dict:
        tp, fp, tn, fn = self.confusion
        return {
            "accuracy": self.accuracy,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "confusion": {"tp": tp, "fp": fp, "tn": tn, "fn": fn},
            "degenerate": self.degenerate,
        }


@dataclass
class RegMetrics:
    mae: float
    mse: float
    rmse: float
    r2: float
    degenerate: bool = False

    def to_dict(self) -> dict:
        return {
            "mae": self.mae,
            "mse": self.mse,
            "rmse": self.rmse,
            "r2": self.r2,
            "degenerate": self.degenerate,
        }


def classification_metrics(y_true, y_pred, positive=1) -> ClsMetrics:
    """Accuracy, precision, recall, F1 with the given positive label."""
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    if y_true.shape != y_pred.shape:
        raise LengthMismatch(f"length mismatch: {y_true.shape} vs {y_pred.shape}")
    if y_true.size == 0:
        raise LengthMismatch("need at least one prediction")
    pos_true = y_true == positive
    pos_pred = y_pred == positive
    tp = int(np.sum(pos_true & pos_pred))
    fp = int(np.sum(~pos_true & pos_pred))
    tn = int(np.sum(~pos_true & ~pos_pred))
    fn = int(np.sum(pos_true & ~pos_pred))
    total = tp + fp + tn + fn
    accuracy = (tp + tn) / total
    degenerate = False
    if tp + fp > 0:
        precision = tp / (tp + fp)
    else:
        precision, degenerate = 0.0, True
    if tp + fn > 0:
        recall = tp / (tp + fn)
    else:
        recall, degenerate = 0.0, True
    if precision + recall > 0:
        f1 = 2.0 * precision * recall / (precision + recall)
    else:
        f1, degenerate = 0.0, True
    return ClsMetrics(accuracy, precision, recall, f1, (tp, fp, tn, fn), degenerate)


def regression_metrics(y_true, y_hat) -> RegMetrics:
    """MAE, MSE, RMSE and R2 = 1 - SSres/SStot."""
    y_true = np.asarray(y_true, dtype=np.float64)
    y_hat = np.asarray(y_hat, dtype=np.float64)
    if y_true.shape != y_hat.shape:
        raise LengthMismatch(f"length mismatch: {y_true.shape} vs {y_hat.shape}")
    if y_true.size < 2:
        raise LengthMismatch("need at least two values for regression metrics")
    err = y_true - y_hat
    mae = float(np.mean(np.abs(err)))
    mse = float(np.mean(err * err))
    rmse = float(np.sqrt(mse))
    ss_res = float(np.sum(err * err))
    ss_tot = float(np.sum((y_true - y_true.mean()) ** 2))
    degenerate = False
    if ss_tot > 0:
        r2 = 1.0 - ss_res / ss_tot
    elif ss_res == 0.0:
        r2 = 1.0
    else:
        r2, degenerate = 0.0, True
    return RegMetrics(mae, mse, rmse, r2, degenerate)


def kfold_indices(n: int, k: int, seed: int) -> list[np.ndarray]:
    """Seeded shuffle then contiguous chunks; first n%k folds get the extra row."""
    if not 2 <= k <= n:
        raise BadK(f"k must satisfy 2 <= k <= n, got k={k}, n={n}")
    perm = SplitMix64(seed).permutation(n)
    base = n // k
    extra = n % k
    folds = []
    offset = 0
    for i in range(k):
        size = base + (1 if i < extra else 0)
        folds.append(perm[offset:offset + size])
        offset += size
    return folds


def primary_metric(task: str, y_true, prediction) -> float:
    """Accuracy for classification, R2 for regression."""
    if task == CLASSIFICATION:
        proba, labels = prediction
        return classification_metrics(y_true, labels).accuracy
    return regression_metrics(y_true, prediction).r2


@dataclass
class CVResult:
    fold_scores: list[float]
    mean_score: float
    errors: list = field(default_factory=list)  # (fold_index, message)


def cross_validate(
    config: ModelConfig,
    X,
    y,
    k: int = 5,
    seed: int = 0,
    folds: list[np.ndarray] | None = None,
) -> CVResult:
    """Mean primary metric over k train/score rounds.

    ``folds`` may be passed in so several configurations share the exact
    same partition (grid search relies on this). Training errors propagate
    annotated with their fold index.
    """
    from .models import predict

    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if folds is None:
        folds = kfold_indices(X.shape[0], k, seed)
    scores = []
    all_idx = np.arange(X.shape[0])
    for i, fold in enumerate(folds):
        mask = np.ones(X.shape[0], dtype=bool)
        mask[fold] = False
        train = all_idx[mask]
        try:
            model = fit(config, X[train], y[train])
            scores.append(primary_metric(config.task, y[fold], predict(model, X[fold])))
        except Exception as exc:
            exc.fold_index = i
            raise
    return CVResult(fold_scores=scores, mean_score=float(np.mean(scores)))


@dataclass
class AggregateReport:
    """Per-repetition metric bundles plus their mean and sample std."""

    seeds: list[int]
    runs: list[dict]  # metric name -> value, one dict per repetition

    @property
    def repetitions(self) -> int:
        return len(self.runs)

    def metric_names(self) -> list[str]:
        return list(self.runs[0].keys()) if self.runs else []

    def mean(self, name: str) -> float:
        return float(np.mean([run[name] for run in self.runs]))

    def std(self, name: str) -> float:
        values = [run[name] for run in self.runs]
        if len(values) < 2:
            return 0.0
        return float(np.std(values, ddof=1))

    def to_dict(self) -> dict:
        return {
            "seeds": list(self.seeds),
            "repetitions": self.repetitions,
            "runs": [dict(run) for run in self.runs],
            "mean": {name: self.mean(name) for name in self.metric_names()},
            "std": {name: self.std(name) for name in self.metric_names()},
        }


def repeat_runs(run_once, repetitions: int, base_seed: int) -> AggregateReport:
    """Run the pipeline ``repetitions`` times with seeds base_seed..+reps-1.

    ``run_once(seed)`` must return a flat dict of metric name -> float.
    Errors propagate annotated with the repetition index.
    """
    if repetitions < 1:
        raise ValueError("repetitions must be >= 1")
    seeds = [base_seed + i for i in range(repetitions)]
    runs = []
    for i, seed in enumerate(seeds):
        try:
            runs.append(dict(run_once(seed)))
        except Exception as exc:
            exc.repetition_index = i
            raise
    return AggregateReport(seeds=seeds, runs=runs)
