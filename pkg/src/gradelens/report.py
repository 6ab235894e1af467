"""Report emission: delimited tables and figures next to the JSON report.

Tables mirror the default-versus-tuned layout of the published comparison
tables (accuracy/precision, recall/F1 for classification; MAE/RMSE, MSE/R2
for regression). Figures are rendered with the Agg backend so the report
path works headless. Every number in the tables is copied from the
evaluation aggregates, never recomputed.
"""

from __future__ import annotations

import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .evaluation import AggregateReport
from .models import CLASSIFICATION, REGRESSION

_CLS_ROWS = [
    ("Logistic Regression", "logistic_classification"),
    ("Random Forest Classifier", "forest_classification"),
    ("Decision Tree Classifier", "tree_classification"),
]
_REG_ROWS = [
    ("Linear Regression", "linear_regression"),
    ("Random Forest Regressor", "forest_regression"),
    ("Decision Tree Regressor", "tree_regression"),
]

_MODEL_LABELS = {key: label for label, key in _CLS_ROWS + _REG_ROWS}


def _cell(report: dict, key: str, variant: str, metric: str) -> float:
    return report["evaluation"][key][f"{variant}_test"][metric]["mean"]


def _table(path: Path, header: list[str], rows: list[list]):
    lines = [";".join(header)]
    for row in rows:
        lines.append(";".join(str(c) for c in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_tables(report: dict, out_dir: Path):
    d = out_dir / "report" / "tables"
    d.mkdir(parents=True, exist_ok=True)
    _table(
        d / "classification_accuracy_precision.csv",
        ["Model", "Default Accuracy", "Tuned Accuracy", "Default Precision", "Tuned Precision"],
        [
            [
                label,
                repr(_cell(report, key, "default", "accuracy")),
                repr(_cell(report, key, "tuned", "accuracy")),
                repr(_cell(report, key, "default", "precision")),
                repr(_cell(report, key, "tuned", "precision")),
            ]
            for label, key in _CLS_ROWS
        ],
    )
    _table(
        d / "classification_recall_f1.csv",
        ["Model", "Default Recall", "Tuned Recall", "Default F1-score", "Tuned F1-score"],
        [
            [
                label,
                repr(_cell(report, key, "default", "recall")),
                repr(_cell(report, key, "tuned", "recall")),
                repr(_cell(report, key, "default", "f1")),
                repr(_cell(report, key, "tuned", "f1")),
            ]
            for label, key in _CLS_ROWS
        ],
    )
    _table(
        d / "regression_mae_rmse.csv",
        ["Model", "Default MAE", "Tuned MAE", "Default RMSE", "Tuned RMSE"],
        [
            [
                label,
                repr(_cell(report, key, "default", "mae")),
                repr(_cell(report, key, "tuned", "mae")),
                repr(_cell(report, key, "default", "rmse")),
                repr(_cell(report, key, "tuned", "rmse")),
            ]
            for label, key in _REG_ROWS
        ],
    )
    _table(
        d / "regression_mse_r2.csv",
        ["Model", "Default MSE", "Tuned MSE", "Default R2", "Tuned R2"],
        [
            [
                label,
                repr(_cell(report, key, "default", "mse")),
                repr(_cell(report, key, "tuned", "mse")),
                repr(_cell(report, key, "default", "r2")),
                repr(_cell(report, key, "tuned", "r2")),
            ]
            for label, key in _REG_ROWS
        ],
    )
    _table(
        d / "tuned_hyperparameters.csv",
        ["Model", "Tuned Hyperparameters", "CV Score (default)", "CV Score (tuned)"],
        [
            [
                _MODEL_LABELS[key],
                json.dumps(report["tuning"][key]["best_config"]["hyperparameters"], sort_keys=True),
                repr(report["tuning"][key]["default_score"]),
                repr(report["tuning"][key]["best_cv_score"]),
            ]
            for key in [k for _, k in _CLS_ROWS + _REG_ROWS]
        ],
    )


def _grouped_bars(ax, labels, default_vals, tuned_vals, title):
    x = np.arange(len(labels))
    width = 0.38
    ax.bar(x - width / 2, default_vals, width, label="default", color="#8da0cb")
    ax.bar(x + width / 2, tuned_vals, width, label="tuned", color="#fc8d62")
    ax.set_xticks(x)
    ax.set_xticklabels(labels, rotation=12, ha="right", fontsize=8)
    ax.set_title(title, fontsize=10)
    ax.grid(axis="y", alpha=0.3)


def write_figures(report: dict, aggregate: AggregateReport, out_dir: Path):
    d = out_dir / "report" / "figures"
    d.mkdir(parents=True, exist_ok=True)

    # default vs tuned, one panel per metric
    for task, rows, metrics, fname in (
        (CLASSIFICATION, _CLS_ROWS, ("accuracy", "precision", "recall", "f1"),
         "classification_default_vs_tuned.png"),
        (REGRESSION, _REG_ROWS, ("mae", "mse", "rmse", "r2"),
         "regression_default_vs_tuned.png"),
    ):
        fig, axes = plt.subplots(2, 2, figsize=(9, 6.5))
        labels = [label for label, _ in rows]
        for ax, metric in zip(axes.ravel(), metrics):
            dv = [_cell(report, key, "default", metric) for _, key in rows]
            tv = [_cell(report, key, "tuned", metric) for _, key in rows]
            _grouped_bars(ax, labels, dv, tv, metric.upper() if len(metric) <= 4 else metric)
        axes[0, 0].legend(fontsize=8)
        fig.suptitle(f"{task} models: default vs tuned (test split, mean over repetitions)")
        fig.tight_layout()
        fig.savefig(d / fname, dpi=120)
        plt.close(fig)

    # stability across repetitions: tuned primary metric per run
    fig, axes = plt.subplots(1, 2, figsize=(10, 4))
    for ax, (task, rows, metric) in zip(
        axes,
        (
            (CLASSIFICATION, _CLS_ROWS, "accuracy"),
            (REGRESSION, _REG_ROWS, "r2"),
        ),
    ):
        for label, key in rows:
            series = [run[f"{key}_tuned_test_{metric}"] for run in aggregate.runs]
            ax.plot(range(1, len(series) + 1), series, marker="o", markersize=3, label=label)
        ax.set_xlabel("repetition")
        ax.set_ylabel(f"test {metric}")
        ax.set_title(f"{task}: tuned {metric} across repetitions", fontsize=10)
        ax.grid(alpha=0.3)
        ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(d / "repetition_stability.png", dpi=120)
    plt.close(fig)


def write_report(cfg, report: dict, aggregate: AggregateReport):
    d = Path(cfg.output_dir) / "report"
    d.mkdir(parents=True, exist_ok=True)
    (d / "run_report.json").write_text(
        json.dumps(report, sort_keys=True, indent=1, separators=(",", ": ")) + "\n",
        encoding="utf-8",
    )
    write_tables(report, Path(cfg.output_dir))
    if cfg.figures:
        write_figures(report, aggregate, Path(cfg.output_dir))
