"""Exhaustive grid search with shared 5-fold cross-validation.

Every expanded configuration is scored on the same fold partition so means
are comparable; the family default is always evaluated and recorded even
when it lies outside the grid. Failing configurations keep their row with
score -inf instead of aborting the search.

Forest grids get a fast path: within a group of configurations that differ
only in n_estimators and max_depth, tree i depends only on seed+i and a
depth cap never changes the splits above it, so one unlimited-depth stream
of max(n_estimators) trees per fold serves every (n_estimators, max_depth)
combination. Scores are bit-identical to fitting each configuration
separately; the test suite checks that equivalence against the naive loop.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import GradelensError, UnknownAxis
from .evaluation import CVResult, cross_validate, kfold_indices, primary_metric
from .models import (
    CANONICAL_PARAMS,
    CLASSIFICATION,
    FOREST,
    LINEAR,
    LOGISTIC,
    TREE,
    ModelConfig,
    default_config,
)
from .models.forest import aggregate_tree_values, grow_forest_tree


@dataclass(frozen=True)
class ParamGrid:
    family: str
    task: str
    axes: tuple[tuple[str, tuple], ...]  # ordered (name, candidate values)

    def __post_init__(self):
        allowed = set(CANONICAL_PARAMS[self.family])
        for name, values in self.axes:
            if name not in allowed:
                raise UnknownAxis(
                    f"{self.family}: axis {name!r} is not a canonical hyperparameter"
                )
            if len(values) == 0:
                raise UnknownAxis(f"axis {name!r} has no candidate values")

    @classmethod
    def from_mapping(cls, family: str, task: str, axes: dict) -> "ParamGrid":
        return cls(family, task, tuple((k, tuple(v)) for k, v in axes.items()))


def shipped_grid(family: str, task: str) -> ParamGrid:
    """Default search grids: small, plausible, and spanning the defaults."""
    if family == LOGISTIC:
        axes = {"C": (0.01, 0.1, 1.0, 10.0), "max_iter": (100, 500)}
    elif family == LINEAR:
        axes = {"fit_intercept": (True, False)}
    elif family == TREE:
        axes = {
            "max_depth": (3, 5, 10, None),
            "min_samples_split": (2, 5, 10),
            "min_samples_leaf": (1, 2, 5),
        }
    elif family == FOREST:
        axes = {
            "n_estimators": (50, 100, 200),
            "max_depth": (5, 10, None),
            "min_samples_split": (2, 5),
        }
    else:
        raise UnknownAxis(f"no shipped grid for family {family!r}")
    return ParamGrid.from_mapping(family, task, axes)


def expand_grid(grid: ParamGrid, seed: int = 0) -> list[ModelConfig]:
    """Cartesian product in axis order, last axis fastest (odometer order)."""
    if not grid.axes:
        return [default_config(grid.family, grid.task, seed)]
    names = [name for name, _ in grid.axes]
    value_lists = [values for _, values in grid.axes]
    configs = []
    for combo in itertools.product(*value_lists):
        configs.append(ModelConfig(grid.family, grid.task, dict(zip(names, combo)), seed))
    return configs


@dataclass
class TuneRow:
    config: ModelConfig
    fold_scores: list[float]
    mean_score: float
    error: Optional[str] = None
    is_default: bool = False

    def to_dict(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "fold_scores": list(self.fold_scores),
            "mean_score": self.mean_score,
            "error": self.error,
            "is_default": self.is_default,
        }


@dataclass
class TuneResult:
    best_config: ModelConfig
    best_cv_score: float
    table: list[TuneRow]
    default_config: ModelConfig
    default_score: float
    folds_seed: int = 0
    k: int = 5

    def to_dict(self) -> dict:
        return {
            "best_config": self.best_config.to_dict(),
            "best_cv_score": self.best_cv_score,
            "default_config": self.default_config.to_dict(),
            "default_score": self.default_score,
            "k": self.k,
            "folds_seed": self.folds_seed,
            "table": [row.to_dict() for row in self.table],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TuneResult":
        rows = [
            TuneRow(
                config=ModelConfig.from_dict(r["config"]),
                fold_scores=list(r["fold_scores"]),
                mean_score=float(r["mean_score"]),
                error=r.get("error"),
                is_default=bool(r.get("is_default", False)),
            )
            for r in d["table"]
        ]
        return cls(
            best_config=ModelConfig.from_dict(d["best_config"]),
            best_cv_score=float(d["best_cv_score"]),
            table=rows,
            default_config=ModelConfig.from_dict(d["default_config"]),
            default_score=float(d["default_score"]),
            folds_seed=int(d.get("folds_seed", 0)),
            k=int(d.get("k", 5)),
        )


def grid_search(
    grid: ParamGrid, X_train, y_train, k: int = 5, seed: int = 0
) -> TuneResult:
    """Score every configuration with shared folds; best by mean score.

    The best configuration is the argmax over the full table (grid plus the
    recorded default); ties resolve to the earlier table position, with the
    out-of-grid default appended last so grid members win exact ties.
    """
    X = np.asarray(X_train, dtype=np.float64)
    y = np.asarray(y_train, dtype=np.float64)
    folds = kfold_indices(X.shape[0], k, seed)
    configs = expand_grid(grid, seed)
    default = default_config(grid.family, grid.task, seed)
    default_positions = [
        i for i, c in enumerate(configs) if c.resolved() == default.resolved()
    ]
    rows_cfg = list(configs)
    if not default_positions:
        rows_cfg.append(default)
        default_positions = [len(rows_cfg) - 1]

    if grid.family == FOREST:
        results = _forest_grid_scores(rows_cfg, X, y, folds)
    else:
        results = {}
        for i, cfg in enumerate(rows_cfg):
            try:
                results[i] = cross_validate(cfg, X, y, folds=folds)
            except (GradelensError, ValueError) as exc:
                results[i] = exc

    table = []
    for i, cfg in enumerate(rows_cfg):
        res = results[i]
        if isinstance(res, CVResult):
            table.append(
                TuneRow(cfg, res.fold_scores, res.mean_score, None, i in default_positions)
            )
        else:
            table.append(TuneRow(cfg, [], float("-inf"), str(res), i in default_positions))

    best_idx = 0
    for i, row in enumerate(table):
        if row.mean_score > table[best_idx].mean_score:
            best_idx = i
    default_score = table[default_positions[0]].mean_score
    return TuneResult(
        best_config=table[best_idx].config,
        best_cv_score=table[best_idx].mean_score,
        table=table,
        default_config=default,
        default_score=default_score,
        folds_seed=seed,
        k=k,
    )


def _forest_grid_scores(configs, X, y, folds) -> dict:
    """CV scores for forest configs via shared unlimited-depth tree streams."""
    groups: dict[tuple, list[int]] = {}
    for i, cfg in enumerate(configs):
        params = cfg.resolved()
        key = (
            bool(params["bootstrap"]),
            int(params["min_samples_split"]),
            int(params["min_samples_leaf"]),
            str(params["max_features"]),
            cfg.seed,
        )
        groups.setdefault(key, []).append(i)

    n = X.shape[0]
    all_idx = np.arange(n)
    results: dict[int, object] = {}
    for key, members in groups.items():
        template = configs[members[0]]
        stream_params = dict(template.resolved())
        stream_params["max_depth"] = None
        needed = max(int(configs[i].resolved()["n_estimators"]) for i in members)
        per_config_scores: dict[int, list[float]] = {i: [] for i in members}
        failed: dict[int, Exception] = {}
        for fold in folds:
            mask = np.ones(n, dtype=bool)
            mask[fold] = False
            Xt, yt = X[all_idx[mask]], y[all_idx[mask]]
            Xf, yf = X[fold], y[fold]
            try:
                trees = [
                    grow_forest_tree(Xt, yt, template.task, stream_params, template.seed + t)
                    for t in range(needed)
                ]
            except (GradelensError, ValueError) as exc:
                for i in members:
                    failed[i] = exc
                break
            for i in members:
                params = configs[i].resolved()
                n_est = int(params["n_estimators"])
                cap = params["max_depth"]
                cap = None if cap is None else int(cap)
                agg = aggregate_tree_values(
                    np.stack([t.node_values(Xf, cap) for t in trees[:n_est]])
                )
                if template.task == CLASSIFICATION:
                    proba = agg[:, 1]
                    prediction = (proba, (proba >= 0.5).astype(np.int64))
                else:
                    prediction = agg
                per_config_scores[i].append(
                    primary_metric(template.task, yf, prediction)
                )
            del trees
        for i in members:
            if i in failed:
                results[i] = failed[i]
            else:
                scores = per_config_scores[i]
                results[i] = CVResult(fold_scores=scores, mean_score=float(np.mean(scores)))
    return results
