"""Delimited-file ingestion against a FeatureSchema.

``load_table`` parses cells according to column kind (unparseable numerics
become Missing, never NaN); ``validate_rows`` drops rows that cannot be
repaired (missing target, out-of-range or disallowed values) and accounts
for every one of them. The drop fraction is guarded at 5% by default, the
quality bar the reference dataset is known to satisfy.
"""

from __future__ import annotations

import csv

from .errors import DropCapExceeded, FileUnreadable, HeaderMismatch, RowArity
from .schema import (
    CATEGORICAL,
    NUMERIC,
    TARGET,
    DropReport,
    FeatureSchema,
    Missing,
    RawTable,
)

DROP_CAP = 0.05


def _parse_cell(text: str, kind: str):
    text = text.strip()
    if text == "":
        return Missing
    if kind == NUMERIC:
        try:
            value = float(text)
        except ValueError:
            return Missing
        if value != value or value in (float("inf"), float("-inf")):
            return Missing
        return value
    return text


def load_table(path, schema: FeatureSchema, delimiter: str = ";") -> RawTable:
    """Read a delimited UTF-8 file with header row into a RawTable.

    Column order in the result always follows the schema, not the file.
    Raises FileUnreadable, HeaderMismatch or RowArity (with line number).
    """
    try:
        with open(path, "r", encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh, delimiter=delimiter)
            try:
                header = next(reader)
            except StopIteration:
                raise FileUnreadable(f"{path}: file is empty") from None
            header = [h.strip() for h in header]
            expected = set(schema.names)
            got = set(header)
            if got != expected:
                raise HeaderMismatch(missing=expected - got, extra=got - expected)
            col_index = {name: header.index(name) for name in schema.names}
            kinds = {c.name: c.kind for c in schema.columns}
            data: dict[str, list] = {name: [] for name in schema.names}
            n_rows = 0
            for line_no, row in enumerate(reader, start=2):
                if not row:
                    continue  # blank line
                if len(row) != len(header):
                    raise RowArity(line_no, len(header), len(row))
                for name in schema.names:
                    data[name].append(_parse_cell(row[col_index[name]], kinds[name]))
                n_rows += 1
    except OSError as exc:
        raise FileUnreadable(f"cannot read {path}: {exc}") from exc

    return RawTable(schema, {k: tuple(v) for k, v in data.items()}, n_rows)


def _row_violation(table: RawTable, i: int):
    """Reason a row must be dropped, or None if it is repairable."""
    for spec in table.schema.columns:
        value = table.columns[spec.name][i]
        if value is Missing:
            if spec.role == TARGET:
                return ("missing_target", f"target column {spec.name!r} is missing")
            continue  # missing predictors go to imputation
        if spec.kind == NUMERIC and spec.valid_range is not None:
            lo, hi = spec.valid_range
            if not lo <= value <= hi:
                return (
                    "range_violation",
                    f"column {spec.name!r}: {value} outside [{lo}, {hi}]",
                )
        if spec.kind == CATEGORICAL and spec.allowed_values is not None:
            if value not in spec.allowed_values:
                return (
                    "value_violation",
                    f"column {spec.name!r}: {value!r} not in allowed set",
                )
    return None


def validate_rows(table: RawTable, strict_cap: bool = True) -> tuple[RawTable, DropReport]:
    """Drop irreparably inconsistent rows; keep everything else.

    A row is irreparable when its target is missing or any present value
    violates its column constraints. Missing predictor cells are retained
    for imputation. With ``strict_cap`` (the default) a drop fraction above
    5% raises DropCapExceeded: the dataset no longer matches the quality
    assumption the pipeline was built for.
    """
    report = DropReport(rows_in=table.n_rows)
    keep = []
    for i in range(table.n_rows):
        violation = _row_violation(table, i)
        if violation is None:
            keep.append(i)
        else:
            report.add(i, *violation)
    if strict_cap and report.drop_fraction > DROP_CAP:
        raise DropCapExceeded(
            f"{report.rows_dropped}/{report.rows_in} rows dropped "
            f"({report.drop_fraction:.1%} > {DROP_CAP:.0%} cap)"
        )
    return table.take_rows(keep), report
