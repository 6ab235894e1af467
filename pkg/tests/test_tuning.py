import numpy as np
import pytest

from gradelens.errors import UnknownAxis
from gradelens.evaluation import cross_validate, kfold_indices
from gradelens.models import ModelConfig, default_config
from gradelens.tuning import ParamGrid, TuneResult, expand_grid, grid_search, shipped_grid


def brute_force_search(grid, X, y, k=5, seed=0):
    """Independent exhaustive loop reusing cross_validate on shared folds."""
    folds = kfold_indices(X.shape[0], k, seed)
    configs = expand_grid(grid, seed)
    default = default_config(grid.family, grid.task, seed)
    if not any(c.resolved() == default.resolved() for c in configs):
        configs = configs + [default]
    rows = []
    for cfg in configs:
        try:
            res = cross_validate(cfg, X, y, folds=folds)
            rows.append((cfg, res.fold_scores, res.mean_score))
        except Exception as exc:  # noqa: BLE001 - mirror the -inf rule
            rows.append((cfg, [], float("-inf")))
    best = max(range(len(rows)), key=lambda i: (rows[i][2], -i))
    return rows, rows[best][0], rows[best][2]


@pytest.fixture
def xor_data():
    # depth-2 trees can represent XOR exactly, depth-1 cannot
    corners = np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]])
    X = np.tile(corners, (10, 1))
    y = (X[:, 0] != X[:, 1]).astype(float)
    return X, y


def test_expand_single_axis():
    grid = ParamGrid.from_mapping("logistic", "classification", {"C": [1.0]})
    configs = expand_grid(grid)
    assert len(configs) == 1
    assert configs[0].hyperparameters == {"C": 1.0}


def test_expand_odometer_order():
    grid = ParamGrid.from_mapping(
        "tree", "classification", {"max_depth": [3, 5, 10], "min_samples_split": [2, 5]}
    )
    configs = expand_grid(grid)
    assert len(configs) == 6
    seen = [(c.hyperparameters["max_depth"], c.hyperparameters["min_samples_split"]) for c in configs]
    assert seen == [(3, 2), (3, 5), (5, 2), (5, 5), (10, 2), (10, 5)]


def test_expand_empty_grid_is_default_only():
    grid = ParamGrid("tree", "classification", ())
    configs = expand_grid(grid)
    assert len(configs) == 1
    assert configs[0].resolved() == default_config("tree", "classification").resolved()


def test_unknown_axis_rejected():
    with pytest.raises(UnknownAxis):
        ParamGrid.from_mapping("logistic", "classification", {"learning_rate": [0.1]})


def test_single_config_grid_selects_it(xor_data):
    X, y = xor_data
    grid = ParamGrid.from_mapping("tree", "classification", {"max_depth": [2]})
    result = grid_search(grid, X, y, k=5, seed=0)
    assert result.best_config.hyperparameters == {"max_depth": 2}
    assert result.best_cv_score == pytest.approx(1.0)


def test_xor_grid_prefers_depth_two(xor_data):
    X, y = xor_data
    grid = ParamGrid.from_mapping("tree", "classification", {"max_depth": [1, 2]})
    result = grid_search(grid, X, y, k=5, seed=3)
    assert result.best_config.hyperparameters["max_depth"] == 2
    by_depth = {
        row.config.hyperparameters.get("max_depth"): row.mean_score
        for row in result.table
        if "max_depth" in row.config.hyperparameters
    }
    assert by_depth[2] == pytest.approx(1.0)
    assert by_depth[1] < 0.8


def test_matches_brute_force_oracle(xor_data):
    X, y = xor_data
    grid = ParamGrid.from_mapping(
        "tree",
        "classification",
        {"max_depth": [1, 2, 4], "min_samples_split": [2, 8], "min_samples_leaf": [1, 3]},
    )
    result = grid_search(grid, X, y, k=5, seed=7)
    rows, best_cfg, best_score = brute_force_search(grid, X, y, k=5, seed=7)
    assert len(result.table) == len(rows)
    for row, (cfg, fold_scores, mean_score) in zip(result.table, rows):
        assert row.config.resolved() == cfg.resolved()
        assert row.fold_scores == fold_scores
        assert row.mean_score == mean_score
    assert result.best_config.resolved() == best_cfg.resolved()
    assert result.best_cv_score == best_score


def test_forest_fast_path_matches_brute_force():
    rng = np.random.default_rng(5)
    X = rng.random((90, 4))
    y = (X @ rng.random(4) + 0.2 * rng.standard_normal(90) > 1.0).astype(float)
    grid = ParamGrid.from_mapping(
        "forest",
        "classification",
        {"n_estimators": [2, 5], "max_depth": [2, None], "min_samples_split": [2, 6]},
    )
    result = grid_search(grid, X, y, k=3, seed=11)
    rows, best_cfg, best_score = brute_force_search(grid, X, y, k=3, seed=11)
    for row, (cfg, fold_scores, mean_score) in zip(result.table, rows):
        assert row.config.resolved() == cfg.resolved()
        assert row.fold_scores == fold_scores, row.config.hyperparameters
        assert row.mean_score == mean_score
    assert result.best_config.resolved() == best_cfg.resolved()
    assert result.best_cv_score == best_score


def test_forest_fast_path_matches_brute_force_regression():
    rng = np.random.default_rng(6)
    X = rng.random((80, 3))
    y = X @ rng.random(3) + 0.1 * rng.standard_normal(80)
    grid = ParamGrid.from_mapping(
        "forest", "regression", {"n_estimators": [3, 6], "max_depth": [3, None]}
    )
    result = grid_search(grid, X, y, k=3, seed=2)
    rows, best_cfg, best_score = brute_force_search(grid, X, y, k=3, seed=2)
    for row, (cfg, fold_scores, mean_score) in zip(result.table, rows):
        assert row.fold_scores == fold_scores
    assert result.best_config.resolved() == best_cfg.resolved()
    assert result.best_cv_score == best_score


def test_default_always_in_table(xor_data):
    X, y = xor_data
    grid = ParamGrid.from_mapping("tree", "classification", {"max_depth": [1, 2]})
    result = grid_search(grid, X, y, k=5, seed=0)
    defaults = [row for row in result.table if row.is_default]
    assert len(defaults) == 1
    assert defaults[0].config.resolved() == default_config("tree", "classification").resolved()
    # the default (unlimited depth) is outside the grid: appended last
    assert result.table[-1].is_default


def test_best_at_least_default(xor_data):
    X, y = xor_data
    grid = ParamGrid.from_mapping("tree", "classification", {"max_depth": [1, 2, None]})
    result = grid_search(grid, X, y, k=5, seed=1)
    assert result.best_cv_score >= result.default_score


def test_failing_config_scores_minus_inf():
    X = np.ones((30, 2))
    y = np.ones(30)  # single class: logistic fails, every config
    grid = ParamGrid.from_mapping("logistic", "classification", {"C": [1.0, 2.0]})
    result = grid_search(grid, X, y, k=3, seed=0)
    assert all(row.mean_score == float("-inf") for row in result.table)
    assert all(row.error for row in result.table)


def test_tie_break_prefers_earlier_expansion(xor_data):
    X, y = xor_data
    # depths 2 and 3 both achieve CV accuracy 1.0; 2 comes first
    grid = ParamGrid.from_mapping("tree", "classification", {"max_depth": [2, 3]})
    result = grid_search(grid, X, y, k=5, seed=0)
    assert result.best_config.hyperparameters["max_depth"] == 2


def test_tuneresult_roundtrip(xor_data):
    X, y = xor_data
    grid = ParamGrid.from_mapping("tree", "classification", {"max_depth": [1, 2]})
    result = grid_search(grid, X, y, k=5, seed=0)
    doc = result.to_dict()
    back = TuneResult.from_dict(doc)
    assert back.best_config.resolved() == result.best_config.resolved()
    assert back.best_cv_score == result.best_cv_score
    assert len(back.table) == len(result.table)


def test_shipped_grids_have_documented_shapes():
    assert len(expand_grid(shipped_grid("logistic", "classification"))) == 8
    assert len(expand_grid(shipped_grid("tree", "classification"))) == 36
    assert len(expand_grid(shipped_grid("forest", "regression"))) == 18
    assert len(expand_grid(shipped_grid("linear", "regression"))) == 2


def test_axis_permutation_preserves_best_score(xor_data):
    X, y = xor_data
    g1 = ParamGrid.from_mapping(
        "tree", "classification", {"max_depth": [1, 2], "min_samples_split": [2, 8]}
    )
    g2 = ParamGrid.from_mapping(
        "tree", "classification", {"max_depth": [2, 1], "min_samples_split": [8, 2]}
    )
    r1 = grid_search(g1, X, y, k=5, seed=0)
    r2 = grid_search(g2, X, y, k=5, seed=0)
    assert r1.best_cv_score == r2.best_cv_score
    assert {row.mean_score for row in r1.table} == {row.mean_score for row in r2.table}
