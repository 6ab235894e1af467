"""Random forests: bagged CART trees with per-split feature subsets.

Tree i draws its bootstrap sample and every feature subset from the stream
seeded seed+i, so trees are independent of n_estimators: the first k trees
of a larger forest are exactly the k-tree forest. Aggregation averages leaf
probability vectors (classification) or tree means (regression), reduced in
tree order so parallel and serial training/evaluation agree bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..errors import DegenerateDesign
from ..prng import SplitMix64
from . import CLASSIFICATION, ModelConfig, check_feature_count, resolve_max_features
from .tree import TreeModel, _grow


def aggregate_tree_values(stacked: np.ndarray) -> np.ndarray:
    """Mean over trees (axis 0), exact when all trees agree.

    Averaging as base + mean(deviations) makes an ensemble of identical
    trees reproduce the single tree's outputs bit for bit; every forest
    aggregation path must use this same reduction so cached and fresh fits
    score identically.
    """
    base = stacked[0]
    return base + (stacked - base).sum(axis=0) / stacked.shape[0]


@dataclass
class ForestModel:
    task: str
    params: dict
    trees: list[TreeModel]
    seed: int
    fitted_on: list[str] = field(default_factory=list)

    @property
    def n_features(self) -> int:
        return len(self.fitted_on)

    def _aggregated(self, X, depth_cap: Optional[int] = None) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        check_feature_count(self, X)
        return aggregate_tree_values(
            np.stack([t.node_values(X, depth_cap) for t in self.trees])
        )

    def predict_proba(self, X, depth_cap: Optional[int] = None) -> np.ndarray:
        return self._aggregated(X, depth_cap)[:, 1]

    def predict(self, X, depth_cap: Optional[int] = None) -> np.ndarray:
        agg = self._aggregated(X, depth_cap)
        if self.task == CLASSIFICATION:
            return (agg[:, 1] >= 0.5).astype(np.int64)
        return agg

    def importances(self) -> np.ndarray:
        raw = np.sum([t.importance_raw for t in self.trees], axis=0)
        total = raw.sum()
        if total <= 0:
            return np.zeros_like(raw)
        return raw / total

    def to_dict(self) -> dict:
        return {
            "task": self.task,
            "params": dict(self.params),
            "seed": int(self.seed),
            "fitted_on": list(self.fitted_on),
            "trees": [t.to_dict() for t in self.trees],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ForestModel":
        return cls(
            task=d["task"],
            params=dict(d["params"]),
            trees=[TreeModel.from_dict(t) for t in d["trees"]],
            seed=int(d["seed"]),
            fitted_on=list(d["fitted_on"]),
        )


def grow_forest_tree(X, y, task: str, params: dict, tree_seed: int) -> TreeModel:
    """One forest member: bootstrap (optional) then a subset-split tree.

    Both the bootstrap draw and all per-split feature subsets consume the
    single stream seeded ``tree_seed``; the tree depends on nothing else.
    """
    rng = SplitMix64(tree_seed)
    n = X.shape[0]
    if params["bootstrap"]:
        idx = rng.randbelow_array(n, n)
        Xb, yb = X[idx], y[idx]
    else:
        Xb, yb = X, y
    k = resolve_max_features(params["max_features"], X.shape[1])
    tree = _grow(
        Xb,
        yb,
        task=task,
        max_depth=params["max_depth"],
        min_samples_split=int(params["min_samples_split"]),
        min_samples_leaf=int(params["min_samples_leaf"]),
        n_subset=k,
        rng=rng,
    )
    tree.params = dict(params)
    tree.fitted_on = [f"x{j}" for j in range(X.shape[1])]
    return tree


def fit_forest(
    X, y, config: ModelConfig, feature_names: Optional[list] = None
) -> ForestModel:
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0 or X.shape[1] == 0:
        raise DegenerateDesign(f"design matrix has shape {X.shape}")
    params = config.resolved()
    n_estimators = int(params["n_estimators"])
    if n_estimators < 1:
        raise DegenerateDesign("n_estimators must be >= 1")
    names = list(feature_names) if feature_names else [f"x{j}" for j in range(X.shape[1])]
    trees = []
    for i in range(n_estimators):
        tree = grow_forest_tree(X, y, config.task, params, config.seed + i)
        tree.fitted_on = names
        trees.append(tree)
    return ForestModel(
        task=config.task, params=params, trees=trees, seed=config.seed, fitted_on=names
    )
