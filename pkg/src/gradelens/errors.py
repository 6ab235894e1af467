"""Exception hierarchy for the gradelens pipeline.

Every stage raises a subclass of GradelensError carrying a stable
machine-readable ``code`` so the CLI can report which stage failed and why
without string matching.
"""


class GradelensError(Exception):
    """Base class for all gradelens errors."""

    code = "error"


# -- ingestion -----------------------------------------------------------

class FileUnreadable(GradelensError):
    code = "file_unreadable"


class HeaderMismatch(GradelensError):
    code = "header_mismatch"

    def __init__(self, missing, extra):
        self.missing = sorted(missing)
        self.extra = sorted(extra)
        super().__init__(
            f"header does not match schema (missing={self.missing}, extra={self.extra})"
        )


class RowArity(GradelensError):
    code = "row_arity"

    def __init__(self, line_number, expected, got):
        self.line_number = line_number
        super().__init__(
            f"line {line_number}: expected {expected} cells, got {got}"
        )


class DropCapExceeded(GradelensError):
    code = "drop_cap_exceeded"


class SchemaError(GradelensError):
    code = "schema_error"


# -- preprocessing -------------------------------------------------------

class AllMissingColumn(GradelensError):
    code = "all_missing_column"


class LengthMismatch(GradelensError):
    code = "length_mismatch"


class EmptySelection(GradelensError):
    code = "empty_selection"


class UnseenCategory(GradelensError):
    code = "unseen_category"

    def __init__(self, column, value):
        self.column = column
        self.value = value
        super().__init__(f"column {column!r}: value {value!r} not in fitted code map")


class TooFewRows(GradelensError):
    code = "too_few_rows"


# -- models --------------------------------------------------------------

class DegenerateDesign(GradelensError):
    code = "degenerate_design"


class NonBinaryLabels(GradelensError):
    code = "non_binary_labels"


class SingleClassTraining(GradelensError):
    code = "single_class_training"


class EmptyNode(GradelensError):
    code = "empty_node"


class FeatureCountMismatch(GradelensError):
    code = "feature_count_mismatch"


class ModelPairMismatch(GradelensError):
    code = "model_pair_mismatch"


class VersionMismatch(GradelensError):
    code = "version_mismatch"


class CorruptArtifact(GradelensError):
    code = "corrupt_artifact"


class ConfigError(GradelensError):
    code = "config_error"


# -- evaluation / tuning -------------------------------------------------

class BadK(GradelensError):
    code = "bad_k"


class UnknownAxis(GradelensError):
    code = "unknown_axis"


class UnsupportedModel(GradelensError):
    code = "unsupported_model"


class StageError(GradelensError):
    """Wraps any error with the pipeline stage where it happened."""

    code = "stage_error"

    def __init__(self, stage, cause):
        self.stage = stage
        self.cause = cause
        cause_code = getattr(cause, "code", "error")
        self.code = f"{stage}:{cause_code}"
        super().__init__(f"stage {stage!r} failed: {cause}")
