"""Declarative column schema and the in-memory table it validates.

The schema is the contract between a raw delimited file and the numeric
pipeline: every column has a kind (numeric or categorical), a role
(predictor, target, identifier, ignored) and optional value constraints.
Missing cells are represented by an explicit sentinel, never by NaN or magic
numbers, so "zero missing values after imputation" is a countable assertion.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import yaml

from .errors import SchemaError

NUMERIC = "numeric"
CATEGORICAL = "categorical"

PREDICTOR = "predictor"
TARGET = "target"
IDENTIFIER = "identifier"
IGNORED = "ignored"

_KINDS = (NUMERIC, CATEGORICAL)
_ROLES = (PREDICTOR, TARGET, IDENTIFIER, IGNORED)


class _MissingType:
    """Singleton marker for an absent cell value."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "Missing"

    def __bool__(self):
        return False


Missing = _MissingType()


@dataclass(frozen=True)
class ColumnSpec:
    """One column: what it is called, what it holds, how it is used."""

    name: str
    kind: str
    role: str
    valid_range: Optional[tuple[float, float]] = None
    allowed_values: Optional[frozenset[str]] = None

    def __post_init__(self):
        if not self.name:
            raise SchemaError("column name must be non-empty")
        if self.kind not in _KINDS:
            raise SchemaError(f"column {self.name!r}: unknown kind {self.kind!r}")
        if self.role not in _ROLES:
            raise SchemaError(f"column {self.name!r}: unknown role {self.role!r}")
        if self.role == TARGET and self.kind != NUMERIC:
            raise SchemaError(f"target column {self.name!r} must be numeric")
        if self.valid_range is not None:
            if self.kind != NUMERIC:
                raise SchemaError(
                    f"column {self.name!r}: valid_range only applies to numeric columns"
                )
            lo, hi = self.valid_range
            if not lo <= hi:
                raise SchemaError(f"column {self.name!r}: empty valid_range {self.valid_range}")
        if self.allowed_values is not None and self.kind != CATEGORICAL:
            raise SchemaError(
                f"column {self.name!r}: allowed_values only applies to categorical columns"
            )


@dataclass(frozen=True)
class FeatureSchema:
    """Ordered column list plus the grading contract for the target."""

    columns: tuple[ColumnSpec, ...]
    pass_threshold: float
    grade_scale: tuple[float, float]

    def __post_init__(self):
        names = [c.name for c in self.columns]
        if len(set(names)) != len(names):
            dupes = sorted({n for n in names if names.count(n) > 1})
            raise SchemaError(f"duplicate column names: {dupes}")
        targets = [c for c in self.columns if c.role == TARGET]
        if len(targets) != 1:
            raise SchemaError(f"schema must have exactly one target column, found {len(targets)}")
        lo, hi = self.grade_scale
        if not lo < hi:
            raise SchemaError(f"grade_scale must satisfy min < max, got {self.grade_scale}")
        if not lo <= self.pass_threshold <= hi:
            raise SchemaError(
                f"pass_threshold {self.pass_threshold} outside grade_scale {self.grade_scale}"
            )

    @property
    def target(self) -> ColumnSpec:
        return next(c for c in self.columns if c.role == TARGET)

    @property
    def predictors(self) -> tuple[ColumnSpec, ...]:
        return tuple(c for c in self.columns if c.role == PREDICTOR)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.columns)

    def column(self, name: str) -> ColumnSpec:
        for c in self.columns:
            if c.name == name:
                return c
        raise KeyError(name)

    def drop_predictors(self, names: Iterable[str]) -> "FeatureSchema":
        """Schema with the given predictor columns removed."""
        gone = set(names)
        kept = tuple(c for c in self.columns if c.name not in gone or c.role != PREDICTOR)
        return FeatureSchema(kept, self.pass_threshold, self.grade_scale)


@dataclass(frozen=True)
class RawTable:
    """Column-major table of parsed cells, immutable once built.

    ``columns`` maps each schema column name to a tuple of cells where a cell
    is a float (numeric), str (categorical) or the Missing sentinel.
    ``pre_impute_missing`` is carried metadata: imputation records the
    missing fractions it observed so later stages can still reason about
    pre-imputation missingness.
    """

    schema: FeatureSchema
    columns: dict[str, tuple]
    n_rows: int
    pre_impute_missing: Optional[dict[str, float]] = None

    def __post_init__(self):
        for spec in self.schema.columns:
            col = self.columns.get(spec.name)
            if col is None or len(col) != self.n_rows:
                raise SchemaError(
                    f"column {spec.name!r} missing or wrong length in table data"
                )

    def missing_count(self, name: str) -> int:
        return sum(1 for v in self.columns[name] if v is Missing)

    def missing_fraction(self, name: str) -> float:
        if self.n_rows == 0:
            return 0.0
        return self.missing_count(name) / self.n_rows

    def observed(self, name: str) -> list:
        """Non-missing cells of a column, in row order."""
        return [v for v in self.columns[name] if v is not Missing]

    def row(self, i: int) -> dict:
        return {name: self.columns[name][i] for name in self.schema.names}

    def take_rows(self, indices: Sequence[int]) -> "RawTable":
        cols = {
            name: tuple(col[i] for i in indices) for name, col in self.columns.items()
        }
        return RawTable(self.schema, cols, len(indices), self.pre_impute_missing)


@dataclass
class DropReport:
    """Accounting of rows removed by validation."""

    rows_in: int
    rows_dropped: int = 0
    reasons: list = field(default_factory=list)  # (row_index, code, detail)

    def add(self, row_index: int, code: str, detail: str):
        self.reasons.append((row_index, code, detail))
        self.rows_dropped += 1

    @property
    def drop_fraction(self) -> float:
        return self.rows_dropped / self.rows_in if self.rows_in else 0.0

    def to_dict(self) -> dict:
        return {
            "rows_in": self.rows_in,
            "rows_dropped": self.rows_dropped,
            "drop_fraction": self.drop_fraction,
            "reasons": [
                {"row": r, "code": c, "detail": d} for r, c, d in self.reasons
            ],
        }


def load_schema(path) -> FeatureSchema:
    """Read a FeatureSchema from its YAML document.

    Expected shape::

        pass_threshold: 10.0
        grade_scale: [0.0, 20.0]
        columns:
          - {name: gender, kind: categorical, role: predictor, allowed: [F, M]}
          - {name: age, kind: numeric, role: predictor, range: [15, 80]}
          - {name: final_grade, kind: numeric, role: target, range: [0, 20]}
    """
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = yaml.safe_load(fh)
    except OSError as exc:
        raise SchemaError(f"cannot read schema file {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise SchemaError(f"schema file {path} is not a mapping")
    try:
        columns = []
        for entry in doc["columns"]:
            rng = entry.get("range")
            allowed = entry.get("allowed")
            columns.append(
                ColumnSpec(
                    name=str(entry["name"]),
                    kind=str(entry["kind"]),
                    role=str(entry["role"]),
                    valid_range=tuple(float(v) for v in rng) if rng else None,
                    allowed_values=frozenset(str(v) for v in allowed) if allowed else None,
                )
            )
        scale = doc["grade_scale"]
        return FeatureSchema(
            columns=tuple(columns),
            pass_threshold=float(doc["pass_threshold"]),
            grade_scale=(float(scale[0]), float(scale[1])),
        )
    except KeyError as exc:
        raise SchemaError(f"schema file {path}: missing key {exc}") from exc
