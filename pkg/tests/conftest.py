"""Shared fixtures: a small synthetic cohort for fast pipeline tests."""

from __future__ import annotations

import textwrap
from pathlib import Path

import numpy as np
import pytest

from gradelens.prng import SplitMix64

REPO_ROOT = Path(__file__).resolve().parent.parent


def write_tiny_dataset(directory: Path, n: int = 240, seed: int = 7) -> dict:
    """Small but realistic cohort: 6 predictors, linear-ish grade signal."""
    rng = SplitMix64(seed)
    score = np.clip(10 + 3.2 * rng.gauss_array(n), 0, 20)
    hours = np.clip(np.round(12 + 5 * rng.gauss_array(n)), 0, 40)
    attendance = np.clip(70 + 15 * rng.gauss_array(n), 0, 100)
    shift = np.where(rng.random_array(n) < 0.3, "evening", "day")
    support = np.where(rng.random_array(n) < 0.4, "yes", "no")
    noise_col = rng.random_array(n) * 10  # irrelevant
    grade = np.clip(
        np.round(
            (
                0.8 * score
                + 0.08 * hours
                + 0.04 * attendance
                + np.where(shift == "evening", -0.8, 0.0)
                + np.where(support == "yes", 0.6, 0.0)
                - 1.2
                + 1.1 * rng.gauss_array(n)
            )
            * 10
        )
        / 10,
        0,
        20,
    )
    lines = ["sid;entry_score;study_hours;attendance_pct;shift;support;lottery;final_grade"]
    for i in range(n):
        lines.append(
            f"T{i:04d};{score[i]:.1f};{int(hours[i])};{attendance[i]:.1f};"
            f"{shift[i]};{support[i]};{noise_col[i]:.2f};{grade[i]:.1f}"
        )
    csv_path = directory / "tiny.csv"
    csv_path.write_text("\n".join(lines) + "\n", encoding="utf-8")

    schema_path = directory / "tiny_schema.yaml"
    schema_path.write_text(
        textwrap.dedent(
            """\
            pass_threshold: 10.0
            grade_scale: [0.0, 20.0]
            columns:
              - {name: sid, kind: categorical, role: identifier}
              - {name: entry_score, kind: numeric, role: predictor, range: [0, 20]}
              - {name: study_hours, kind: numeric, role: predictor, range: [0, 40]}
              - {name: attendance_pct, kind: numeric, role: predictor, range: [0, 100]}
              - {name: shift, kind: categorical, role: predictor, allowed: [day, evening]}
              - {name: support, kind: categorical, role: predictor, allowed: ["no", "yes"]}
              - {name: lottery, kind: numeric, role: predictor, range: [0, 10]}
              - {name: final_grade, kind: numeric, role: target, range: [0, 20]}
            """
        ),
        encoding="utf-8",
    )

    config_path = directory / "tiny_config.yaml"
    config_path.write_text(
        textwrap.dedent(
            f"""\
            dataset: tiny.csv
            delimiter: ";"
            schema: tiny_schema.yaml
            split_seed: 11
            repetitions: 2
            cv_folds: 3
            grids:
              logistic:
                C: [1.0]
              linear:
                fit_intercept: [true]
              tree:
                max_depth: [2, 4]
                min_samples_leaf: [2]
              forest:
                n_estimators: [5]
                max_depth: [3]
            risk:
              threshold: 0.70
              top_k: 3
            output_dir: out
            figures: false
            """
        ),
        encoding="utf-8",
    )
    return {"csv": csv_path, "schema": schema_path, "config": config_path}


@pytest.fixture
def tiny_dataset(tmp_path):
    return write_tiny_dataset(tmp_path)


@pytest.fixture(scope="session")
def reference_paths():
    return {
        "csv": REPO_ROOT / "data" / "student_records.csv",
        "schema": REPO_ROOT / "configs" / "reference_schema.yaml",
        "config": REPO_ROOT / "configs" / "reference.yaml",
    }
