"""Preprocessing pipeline: imputation, feature selection, encoding, scaling.

Order of operations in the full pipeline: impute -> select_features ->
encode_and_normalize -> split. Imputation records the missing fractions it
saw so the selection stage can still filter on pre-imputation missingness.
Normalization statistics are fit on the training rows only and applied
everywhere, so validation and test rows never leak into the scaler.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import (
    AllMissingColumn,
    EmptySelection,
    LengthMismatch,
    TooFewRows,
    UnseenCategory,
)
from .prng import SplitMix64
from .schema import CATEGORICAL, NUMERIC, Missing, RawTable

TRAIN_FRACTION = 0.8
VALIDATION_FRACTION = 0.1


@dataclass(frozen=True)
class SelectionConfig:
    """Knobs for the three-stage predictor filter."""

    max_missing_fraction: float = 0.30
    min_variance: float = 0.0
    correlation_cutoff: float = 0.85
    keep_list: Optional[tuple[str, ...]] = None

    def __post_init__(self):
        if not 0.0 < self.correlation_cutoff <= 1.0:
            raise ValueError("correlation_cutoff must be in (0, 1]")
        if not 0.0 <= self.max_missing_fraction < 1.0:
            raise ValueError("max_missing_fraction must be in [0, 1)")
        if self.min_variance < 0.0:
            raise ValueError("min_variance must be >= 0")


@dataclass
class SelectionReport:
    """Every decision the selection stages made, for the report file."""

    dropped_high_missing: list[str] = field(default_factory=list)
    dropped_low_variance: list[str] = field(default_factory=list)
    dropped_correlated: list[tuple[str, str, float]] = field(default_factory=list)
    dropped_domain_review: list[str] = field(default_factory=list)
    kept: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "dropped_high_missing": list(self.dropped_high_missing),
            "dropped_low_variance": list(self.dropped_low_variance),
            "dropped_correlated": [
                {"dropped": d, "kept": k, "r": r} for d, k, r in self.dropped_correlated
            ],
            "dropped_domain_review": list(self.dropped_domain_review),
            "kept": list(self.kept),
        }


@dataclass
class NormParams:
    """Everything needed to map raw feature values to [0,1] and back.

    feature_ranges holds the (min, max) observed on the fit rows for each
    retained feature (categoricals after code mapping); code_maps holds the
    value->code assignment for categoricals; target_scale is the schema's
    grade scale, so grade denormalization is exact scale inversion.
    """

    feature_names: list[str]
    feature_kinds: dict[str, str]
    feature_ranges: dict[str, tuple[float, float]]
    code_maps: dict[str, dict[str, int]]
    target_scale: tuple[float, float]

    def encode_value(self, name: str, value) -> float:
        if self.feature_kinds[name] == CATEGORICAL:
            codes = self.code_maps[name]
            key = str(value)
            if key not in codes:
                raise UnseenCategory(name, value)
            return float(codes[key])
        return float(value)

    def normalize_value(self, name: str, encoded: float) -> float:
        lo, hi = self.feature_ranges[name]
        if hi == lo:
            return 0.0
        return (encoded - lo) / (hi - lo)

    def vectorize(self, raw: dict) -> np.ndarray:
        """Named raw values -> normalized feature vector in schema order."""
        out = np.empty(len(self.feature_names))
        for j, name in enumerate(self.feature_names):
            if name not in raw:
                raise KeyError(name)
            out[j] = self.normalize_value(name, self.encode_value(name, raw[name]))
        return out

    def normalize_grade(self, grade: float) -> float:
        lo, hi = self.target_scale
        return (grade - lo) / (hi - lo)

    def denormalize_grade(self, value: float) -> float:
        lo, hi = self.target_scale
        return min(max(lo + value * (hi - lo), lo), hi)

    def to_dict(self) -> dict:
        return {
            "feature_names": list(self.feature_names),
            "feature_kinds": dict(self.feature_kinds),
            "feature_ranges": {k: list(v) for k, v in self.feature_ranges.items()},
            "code_maps": {k: dict(v) for k, v in self.code_maps.items()},
            "target_scale": list(self.target_scale),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "NormParams":
        return cls(
            feature_names=list(d["feature_names"]),
            feature_kinds=dict(d["feature_kinds"]),
            feature_ranges={k: (float(v[0]), float(v[1])) for k, v in d["feature_ranges"].items()},
            code_maps={k: {kk: int(vv) for kk, vv in v.items()} for k, v in d["code_maps"].items()},
            target_scale=(float(d["target_scale"][0]), float(d["target_scale"][1])),
        )


@dataclass
class DataMatrix:
    """Fully numeric training payload: X in [0,1], both targets, scaler."""

    X: np.ndarray
    y_grade: np.ndarray
    y_pass: np.ndarray
    feature_names: list[str]
    norm: NormParams


@dataclass(frozen=True)
class Split:
    """Disjoint row-index sets: 80% train, 10% validation, rest test."""

    train: np.ndarray
    validation: np.ndarray
    test: np.ndarray
    seed: int


def impute(table: RawTable) -> RawTable:
    """Fill missing predictor cells: column mean (numeric) or mode (categorical).

    Mode ties resolve to the lexicographically smallest value, i.e. the one
    with the smaller encoding code. The returned table carries the observed
    pre-imputation missing fractions as metadata and has zero missing
    predictor cells.
    """
    pre_missing = {c.name: table.missing_fraction(c.name) for c in table.schema.predictors}
    new_columns = dict(table.columns)
    for spec in table.schema.predictors:
        col = table.columns[spec.name]
        observed = [v for v in col if v is not Missing]
        if not observed:
            raise AllMissingColumn(f"predictor {spec.name!r} has no observed values")
        if len(observed) == table.n_rows:
            continue
        if spec.kind == NUMERIC:
            fill = float(np.mean(observed))
        else:
            counts: dict[str, int] = {}
            for v in observed:
                counts[v] = counts.get(v, 0) + 1
            best = max(counts.values())
            fill = min(v for v, c in counts.items() if c == best)
        new_columns[spec.name] = tuple(fill if v is Missing else v for v in col)
    return RawTable(table.schema, new_columns, table.n_rows, pre_impute_missing=pre_missing)


def pearson(xs, ys) -> float:
    """Pearson correlation; 0 by convention when either vector is constant."""
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    if xs.shape != ys.shape:
        raise LengthMismatch(f"length mismatch: {xs.shape} vs {ys.shape}")
    dx = xs - xs.mean()
    dy = ys - ys.mean()
    denom = np.sqrt(np.sum(dx * dx) * np.sum(dy * dy))
    if denom == 0.0:
        return 0.0
    return float(np.sum(dx * dy) / denom)


def _lexicographic_codes(values) -> dict[str, int]:
    return {v: i for i, v in enumerate(sorted(set(values)))}


def _encoded_column(table: RawTable, name: str) -> np.ndarray:
    """Column as floats for correlation/variance; missing cells mean/mode-filled."""
    spec = table.schema.column(name)
    col = table.columns[name]
    observed = [v for v in col if v is not Missing]
    if not observed:
        raise AllMissingColumn(f"predictor {name!r} has no observed values")
    if spec.kind == NUMERIC:
        fill = float(np.mean(observed))
        return np.array([fill if v is Missing else v for v in col], dtype=np.float64)
    codes = _lexicographic_codes(observed)
    counts: dict[str, int] = {}
    for v in observed:
        counts[v] = counts.get(v, 0) + 1
    best = max(counts.values())
    fill_code = codes[min(v for v, c in counts.items() if c == best)]
    return np.array(
        [fill_code if v is Missing else codes[v] for v in col], dtype=np.float64
    )


def select_features(
    table: RawTable, cfg: SelectionConfig
) -> tuple[RawTable, SelectionReport]:
    """Three-stage predictor filter.

    Stage 1 drops predictors whose pre-imputation missing fraction exceeds
    the configured cap, then predictors whose variance is at or below the
    floor. Stage 2 repeatedly takes the remaining pair with the largest
    |r| above the cutoff (ties: earliest pair in schema order) and drops the
    member with the larger mean |r| against all other remaining predictors
    (ties: the later schema column). Stage 3 intersects the survivors with
    the keep list, when one is configured.
    """
    predictors = [c.name for c in table.schema.predictors]
    if not predictors:
        raise EmptySelection("table has no predictors")
    report = SelectionReport()

    missing_frac = table.pre_impute_missing or {}
    remaining = []
    for name in predictors:
        frac = missing_frac.get(name, table.missing_fraction(name))
        if frac > cfg.max_missing_fraction:
            report.dropped_high_missing.append(name)
            continue
        remaining.append(name)
    encoded = {name: _encoded_column(table, name) for name in remaining}
    survivors = []
    for name in remaining:
        if float(np.var(encoded[name])) <= cfg.min_variance:
            report.dropped_low_variance.append(name)
        else:
            survivors.append(name)

    # stage 2: multicollinearity control
    order = {name: i for i, name in enumerate(predictors)}
    corr: dict[tuple[str, str], float] = {}
    for i, a in enumerate(survivors):
        for b in survivors[i + 1:]:
            corr[(a, b)] = pearson(encoded[a], encoded[b])
    active = list(survivors)
    while True:
        worst = None
        for i, a in enumerate(active):
            for b in active[i + 1:]:
                r = corr[(a, b)] if (a, b) in corr else corr[(b, a)]
                if abs(r) > cfg.correlation_cutoff:
                    if worst is None or abs(r) > abs(worst[2]):
                        worst = (a, b, r)
        if worst is None:
            break
        a, b, r = worst

        def mean_abs_corr(name):
            others = [o for o in active if o != name]
            vals = [
                abs(corr[(name, o)] if (name, o) in corr else corr[(o, name)])
                for o in others
            ]
            return float(np.mean(vals)) if vals else 0.0

        ma, mb = mean_abs_corr(a), mean_abs_corr(b)
        if ma > mb:
            drop, keep = a, b
        elif mb > ma:
            drop, keep = b, a
        else:  # tie: drop the later schema column
            drop, keep = (a, b) if order[a] > order[b] else (b, a)
        report.dropped_correlated.append((drop, keep, r))
        active.remove(drop)

    # stage 3: domain review
    if cfg.keep_list is not None:
        keep_set = set(cfg.keep_list)
        final = [name for name in active if name in keep_set]
        report.dropped_domain_review = [n for n in active if n not in keep_set]
    else:
        final = active
    if not final:
        raise EmptySelection("all predictors eliminated by selection")
    report.kept = list(final)

    dropped = set(predictors) - set(final)
    return _restrict(table, dropped), report


def _restrict(table: RawTable, dropped_predictors) -> RawTable:
    schema = table.schema.drop_predictors(dropped_predictors)
    cols = {c.name: table.columns[c.name] for c in schema.columns}
    return RawTable(schema, cols, table.n_rows, table.pre_impute_missing)


def derive_labels(grades, pass_threshold: float) -> np.ndarray:
    """1 (pass) where grade >= threshold, else 0 (fail)."""
    grades = np.asarray(grades, dtype=np.float64)
    return (grades >= pass_threshold).astype(np.int64)


def encode_and_normalize(table: RawTable, fit_rows: Sequence[int]) -> DataMatrix:
    """Label-encode categoricals, min-max scale everything to [0,1].

    Code maps and min/max statistics come from ``fit_rows`` only; the other
    rows are transformed with those statistics (values outside the fitted
    range are clipped into [0,1]). Codes follow lexicographic order of the
    raw values. The target grade is normalized by the schema grade scale,
    never by observed data, so denormalization is exact.
    """
    schema = table.schema
    fit_rows = np.asarray(fit_rows, dtype=np.int64)
    feature_names = [c.name for c in schema.predictors]
    kinds = {c.name: c.kind for c in schema.predictors}

    code_maps: dict[str, dict[str, int]] = {}
    encoded = np.empty((table.n_rows, len(feature_names)), dtype=np.float64)
    for j, name in enumerate(feature_names):
        col = table.columns[name]
        if any(v is Missing for v in col):
            raise AllMissingColumn(
                f"column {name!r} still has missing cells; run impute first"
            )
        if kinds[name] == CATEGORICAL:
            fit_values = [col[i] for i in fit_rows]
            codes = _lexicographic_codes(fit_values)
            code_maps[name] = codes
            for i, v in enumerate(col):
                if v not in codes:
                    raise UnseenCategory(name, v)
                encoded[i, j] = codes[v]
        else:
            encoded[:, j] = np.asarray(col, dtype=np.float64)

    ranges: dict[str, tuple[float, float]] = {}
    X = np.empty_like(encoded)
    for j, name in enumerate(feature_names):
        fit_col = encoded[fit_rows, j]
        lo, hi = float(fit_col.min()), float(fit_col.max())
        ranges[name] = (lo, hi)
        if hi == lo:
            X[:, j] = 0.0
        else:
            X[:, j] = np.clip((encoded[:, j] - lo) / (hi - lo), 0.0, 1.0)

    norm = NormParams(
        feature_names=feature_names,
        feature_kinds=kinds,
        feature_ranges=ranges,
        code_maps=code_maps,
        target_scale=schema.grade_scale,
    )
    grades = np.asarray(table.columns[schema.target.name], dtype=np.float64)
    lo, hi = schema.grade_scale
    y_grade = np.clip((grades - lo) / (hi - lo), 0.0, 1.0)
    denorm = lo + y_grade * (hi - lo)
    y_pass = derive_labels(denorm, schema.pass_threshold)
    return DataMatrix(X, y_grade, y_pass, feature_names, norm)


def split(n: int, seed: int) -> Split:
    """Deterministic shuffled 80/10/10 split of row indices 0..n-1."""
    if n < 10:
        raise TooFewRows(f"need at least 10 rows to split, got {n}")
    perm = SplitMix64(seed).permutation(n)
    n_train = int(np.floor(TRAIN_FRACTION * n))
    n_val = int(np.floor(VALIDATION_FRACTION * n))
    return Split(
        train=perm[:n_train],
        validation=perm[n_train:n_train + n_val],
        test=perm[n_train + n_val:],
        seed=seed,
    )
