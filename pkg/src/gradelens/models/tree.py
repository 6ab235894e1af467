"""CART decision trees: Gini for classification, variance for regression.

Trees grow level by level over presorted per-feature row orderings. Per
level, candidate splits for every node are scored in a handful of
vectorized passes (segmented cumulative sums + ufunc.reduceat), so the cost
scales with tree depth rather than node count. That keeps unlimited-depth
trees on thousands of rows fast enough for grid-searched forests without
leaving numpy.

Split semantics:
  - candidate thresholds are midpoints between consecutive distinct sorted
    values of a feature within a node;
  - the chosen split maximizes the weighted impurity decrease, ties broken
    by lower feature index then lower threshold;
  - rows go left iff x <= threshold;
  - a node stops when it is pure, max_depth is reached, it has fewer than
    min_samples_split rows, or no candidate leaves both children with at
    least min_samples_leaf rows.

Every node stores its own prediction (class-frequency vector or mean), so a
tree can also be evaluated as if it had been grown to a shallower depth cap;
that truncated evaluation is bit-identical to fitting with that max_depth.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..errors import DegenerateDesign, EmptyNode
from ..prng import SplitMix64
from . import CLASSIFICATION, ModelConfig, check_feature_count, resolve_max_features

GAIN_EPS = 1e-12
# Mathematically tied candidates can round to gains a few ulp apart
# (different association order); gains within this relative band of the
# node's best are treated as ties so the documented lowest-feature,
# lowest-threshold rule decides.
TIE_REL = 1e-11


def impurity(values, task: str) -> float:
    """Gini impurity of labels (classification) or variance (regression)."""
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        raise EmptyNode("impurity of an empty node is undefined")
    if task == CLASSIFICATION:
        _, counts = np.unique(values, return_counts=True)
        probs = counts / values.size
        return float(1.0 - np.sum(probs * probs))
    mean = values.mean()
    return float(np.mean((values - mean) ** 2))


@dataclass
class TreeModel:
    """Flat-array binary tree; feature == -1 marks a leaf."""

    task: str
    params: dict
    feature: np.ndarray      # int64 (n_nodes,)
    threshold: np.ndarray    # float64 (n_nodes,)
    left: np.ndarray         # int64 (n_nodes,)
    right: np.ndarray        # int64 (n_nodes,)
    value: np.ndarray        # (n_nodes, 2) class probs or (n_nodes,) means
    n_node_samples: np.ndarray
    importance_raw: np.ndarray  # per-feature summed impurity decrease
    fitted_on: list[str] = field(default_factory=list)

    @property
    def n_features(self) -> int:
        return len(self.fitted_on)

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    def node_values(self, X, depth_cap: Optional[int] = None) -> np.ndarray:
        """Per-row value of the node each row lands in (optionally capped)."""
        X = np.asarray(X, dtype=np.float64)
        check_feature_count(self, X)
        n = X.shape[0]
        cur = np.zeros(n, dtype=np.int64)
        active = np.arange(n)
        depth = 0
        while active.size and (depth_cap is None or depth < depth_cap):
            nodes = cur[active]
            feats = self.feature[nodes]
            alive = feats >= 0
            active = active[alive]
            if not active.size:
                break
            nodes = nodes[alive]
            feats = feats[alive]
            go_left = X[active, feats] <= self.threshold[nodes]
            cur[active] = np.where(go_left, self.left[nodes], self.right[nodes])
            depth += 1
        return self.value[cur]

    def predict_proba(self, X, depth_cap: Optional[int] = None) -> np.ndarray:
        return self.node_values(X, depth_cap)[:, 1]

    def predict(self, X, depth_cap: Optional[int] = None) -> np.ndarray:
        vals = self.node_values(X, depth_cap)
        if self.task == CLASSIFICATION:
            return (vals[:, 1] >= 0.5).astype(np.int64)
        return vals

    def importances(self) -> np.ndarray:
        total = self.importance_raw.sum()
        if total <= 0:
            return np.zeros_like(self.importance_raw)
        return self.importance_raw / total

    def max_depth_reached(self) -> int:
        depth = np.zeros(self.n_nodes, dtype=np.int64)
        for i in range(self.n_nodes):
            if self.feature[i] >= 0:
                depth[self.left[i]] = depth[i] + 1
                depth[self.right[i]] = depth[i] + 1
        return int(depth.max()) if self.n_nodes else 0

    def to_dict(self) -> dict:
        return {
            "task": self.task,
            "params": dict(self.params),
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
            "n_node_samples": self.n_node_samples.tolist(),
            "importance_raw": self.importance_raw.tolist(),
            "fitted_on": list(self.fitted_on),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TreeModel":
        return cls(
            task=d["task"],
            params=dict(d["params"]),
            feature=np.asarray(d["feature"], dtype=np.int64),
            threshold=np.asarray(d["threshold"], dtype=np.float64),
            left=np.asarray(d["left"], dtype=np.int64),
            right=np.asarray(d["right"], dtype=np.int64),
            value=np.asarray(d["value"], dtype=np.float64),
            n_node_samples=np.asarray(d["n_node_samples"], dtype=np.int64),
            importance_raw=np.asarray(d["importance_raw"], dtype=np.float64),
            fitted_on=list(d["fitted_on"]),
        )


def fit_tree(
    X, y, config: ModelConfig, feature_names: Optional[list] = None
) -> TreeModel:
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0 or X.shape[1] == 0:
        raise DegenerateDesign(f"design matrix has shape {X.shape}")
    if X.shape[0] != y.shape[0]:
        raise DegenerateDesign("X and y row counts differ")
    params = config.resolved()
    k = resolve_max_features(params["max_features"], X.shape[1])
    rng = SplitMix64(config.seed) if k < X.shape[1] else None
    model = _grow(
        X,
        y,
        task=config.task,
        max_depth=params["max_depth"],
        min_samples_split=int(params["min_samples_split"]),
        min_samples_leaf=int(params["min_samples_leaf"]),
        n_subset=k,
        rng=rng,
    )
    model.params = params
    model.fitted_on = (
        list(feature_names) if feature_names else [f"x{j}" for j in range(X.shape[1])]
    )
    return model


def _grow(X, y, task, max_depth, min_samples_split, min_samples_leaf, n_subset, rng):
    m, p = X.shape
    classification = task == CLASSIFICATION
    if classification and not set(np.unique(y).tolist()) <= {0.0, 1.0}:
        raise DegenerateDesign("classification trees require 0/1 labels")
    y2 = None if classification else y * y
    msl = max(1, min_samples_leaf)
    mss = max(2, min_samples_split)
    depth_limit = np.inf if max_depth is None else int(max_depth)
    # Both criteria reduce to the same candidate score: the Gini decrease is
    # 2*(S_l^2/m_l + S_r^2/m_r - S^2/m) for 0/1 labels and the variance
    # decrease is the identical expression without the factor (the sum of
    # squares cancels), so one formula scores every split.
    gain_factor = 2.0 if classification else 1.0

    # per-level node records, concatenated at the end (ids are BFS order)
    lv_feature: list[np.ndarray] = []
    lv_threshold: list[np.ndarray] = []
    lv_left: list[np.ndarray] = []
    lv_right: list[np.ndarray] = []
    lv_value: list[np.ndarray] = []
    lv_count: list[np.ndarray] = []
    importance_raw = np.zeros(p, dtype=np.float64)

    # Column j of ord_mat: active rows grouped by node, value-sorted within.
    # Ordering among equal values is irrelevant: candidate statistics sit at
    # value-change boundaries, so plain quicksort is safe here.
    ord_mat = np.argsort(X, axis=0).astype(np.int32)
    group_of_row = np.zeros(m, dtype=np.int32)
    counts = np.array([m], dtype=np.int64)
    node_base = 0
    depth = 0

    while counts.size:
        G = counts.size
        starts = np.concatenate(([0], np.cumsum(counts)[:-1]))
        act = ord_mat[:, 0]
        g_seq = group_of_row[act]
        y_act = y[act]
        S = np.bincount(g_seq, weights=y_act, minlength=G)
        if classification:
            Q = S
        else:
            Q = np.bincount(g_seq, weights=y2[act], minlength=G)
        pure = np.maximum.reduceat(y_act, starts) == np.minimum.reduceat(y_act, starts)
        cnt_f = counts.astype(np.float64)
        if classification:
            parent_cost = cnt_f - (S * S + (cnt_f - S) ** 2) / cnt_f
            value = np.stack([(cnt_f - S) / cnt_f, S / cnt_f], axis=1)
        else:
            parent_cost = Q - S * S / cnt_f
            value = S / cnt_f

        splittable = (
            (counts >= mss) & (counts >= 2 * msl) & ~pure & (depth < depth_limit)
        )

        allowed = None
        cols = np.arange(p)
        if n_subset < p and splittable.any():
            allowed = np.zeros((G, p), dtype=bool)
            split_idx = np.flatnonzero(splittable)
            subsets = _draw_subsets(rng, len(split_idx), p, n_subset)
            allowed[split_idx[:, None], subsets] = True
            cols = np.flatnonzero(allowed.any(axis=0))

        best_gain = np.full(G, -np.inf)
        best_feat = np.full(G, -1, dtype=np.int64)
        best_thr = np.zeros(G)
        if splittable.any():
            # candidate scoring for all features at once on (rows, cols)
            total = act.size
            f = len(cols)
            pos = np.arange(total)
            gstart = starts[g_seq]
            left_m = (pos - gstart + 1).astype(np.float64)[:, None]
            right_m = cnt_f[g_seq][:, None] - left_m
            base_valid = (
                (right_m[:, 0] > 0)
                & (left_m[:, 0] >= msl)
                & (right_m[:, 0] >= msl)
                & splittable[g_seq]
            )
            tie_tol = TIE_REL * np.abs(parent_cost)
            # ranking within a node is invariant to the per-node constant
            # S^2/m, so candidates are scored on the two child terms only
            # and the constant is folded in after selection
            parent_score = S * S / cnt_f

            OM = ord_mat if f == p else ord_mat[:, cols]
            vals = X[OM, cols[None, :]]
            cum_s = np.cumsum(y[OM], axis=0)
            base_s = cum_s[np.maximum(gstart - 1, 0)]
            base_s[gstart == 0] = 0.0
            left_S = np.subtract(cum_s, base_s, out=cum_s)
            right_S = np.subtract(S[g_seq][:, None], left_S, out=base_s)
            with np.errstate(invalid="ignore", divide="ignore"):
                score = np.multiply(left_S, left_S, out=left_S)
                score /= left_m
                rterm = np.multiply(right_S, right_S, out=right_S)
                rterm /= right_m
                score += rterm
            valid = np.empty((total, f), dtype=bool)
            valid[:] = base_valid[:, None]
            valid[:-1] &= vals[1:] > vals[:-1]
            if total:
                valid[-1] = False
            if allowed is not None:
                valid &= allowed[g_seq][:, cols]
            score[~valid] = -np.inf
            smax = np.maximum.reduceat(score, starts, axis=0)
            near_best = score >= (smax - tie_tol[:, None])[g_seq]
            cand = np.where(near_best, pos[:, None], total)
            gpos = np.minimum.reduceat(cand, starts, axis=0)
            safe = np.minimum(gpos, total - 1)
            col_idx = np.arange(f)[None, :]
            ssel = score[safe, col_idx]
            thr = 0.5 * (vals[safe, col_idx] + vals[np.minimum(safe + 1, total - 1), col_idx])
            # best feature per node: first column within the tie band
            row_max = ssel.max(axis=1)
            pick = np.argmax(ssel >= (row_max - tie_tol)[:, None], axis=1)
            rows_g = np.arange(G)
            best_gain = gain_factor * (ssel[rows_g, pick] - parent_score)
            best_feat = np.where(np.isfinite(best_gain), cols[pick], -1)
            best_thr = thr[rows_g, pick]

        do_split = splittable & (best_gain > GAIN_EPS)
        n_split = int(do_split.sum())

        # emit this level's node records
        child_rank = np.cumsum(do_split) - 1
        child_base = node_base + G
        lv_feature.append(np.where(do_split, best_feat, -1))
        lv_threshold.append(np.where(do_split, best_thr, 0.0))
        lv_left.append(np.where(do_split, child_base + 2 * child_rank, -1))
        lv_right.append(np.where(do_split, child_base + 2 * child_rank + 1, -1))
        lv_value.append(value)
        lv_count.append(counts.copy())
        node_base += G

        if n_split == 0:
            break
        np.add.at(importance_raw, best_feat[do_split], best_gain[do_split])

        # route rows of split nodes to their children
        split_rows = do_split[g_seq]
        feats = np.maximum(best_feat[g_seq], 0)
        gl_act = X[act, feats] <= best_thr[g_seq]
        goes_left_row = np.zeros(m, dtype=bool)
        goes_left_row[act] = gl_act
        new_group = 2 * child_rank[g_seq] + np.where(gl_act, 0, 1)
        group_of_row[act] = np.where(split_rows, new_group, -1)

        # Children are a stable partition of each split parent's block, so
        # the next level's orderings come from a direct scatter instead of a
        # sort: lefts keep their relative order at the front of the parent's
        # (compacted) span, rights follow.
        keep = group_of_row[ord_mat] >= 0
        kept_total = int(keep[:, 0].sum())
        ord_f = ord_mat.T[keep.T].reshape(p, kept_total).T
        old_counts = counts[do_split]
        old_starts = np.concatenate(([0], np.cumsum(old_counts)[:-1])).astype(np.int32)
        block_seq = np.repeat(np.arange(n_split, dtype=np.int32), old_counts)
        counts = np.bincount(group_of_row[ord_f[:, 0]], minlength=2 * n_split)
        new_starts = np.concatenate(([0], np.cumsum(counts)[:-1])).astype(np.int32)
        gl = goes_left_row[ord_f]
        cum_l = np.cumsum(gl, axis=0, dtype=np.int32)
        base_l = cum_l[np.maximum(old_starts - 1, 0)][block_seq]
        base_l[old_starts[block_seq] == 0] = 0
        in_block_l = np.subtract(cum_l, base_l, out=cum_l)
        pos_in_block = (
            np.arange(kept_total, dtype=np.int32) - old_starts[block_seq] + 1
        )[:, None]
        dest = np.where(
            gl,
            new_starts[2 * block_seq][:, None] + in_block_l - 1,
            new_starts[2 * block_seq + 1][:, None] + (pos_in_block - in_block_l) - 1,
        )
        ord_next = np.empty_like(ord_f)
        np.put_along_axis(ord_next, dest, ord_f, axis=0)
        ord_mat = ord_next
        depth += 1

    feature = np.concatenate(lv_feature).astype(np.int64)
    value = np.concatenate(lv_value)
    return TreeModel(
        task=task,
        params={},
        feature=feature,
        threshold=np.concatenate(lv_threshold),
        left=np.concatenate(lv_left).astype(np.int64),
        right=np.concatenate(lv_right).astype(np.int64),
        value=value,
        n_node_samples=np.concatenate(lv_count).astype(np.int64),
        importance_raw=importance_raw,
        fitted_on=[],
    )


def _draw_subsets(rng: SplitMix64, n_groups: int, p: int, k: int) -> np.ndarray:
    """One sorted k-of-p feature subset per group, drawn in group order.

    Vectorized partial Fisher-Yates; consumes exactly n_groups * k stream
    outputs, matching k scalar draws per group in order.
    """
    if n_groups == 0:
        return np.empty((0, k), dtype=np.int64)
    draws = rng.bulk_u64(n_groups * k).reshape(n_groups, k)
    pool = np.tile(np.arange(p, dtype=np.int64), (n_groups, 1))
    rows = np.arange(n_groups)
    for i in range(k):
        j = i + (draws[:, i] % np.uint64(p - i)).astype(np.int64)
        tmp = pool[rows, i].copy()
        pool[rows, i] = pool[rows, j]
        pool[rows, j] = tmp
    return np.sort(pool[:, :k], axis=1)
