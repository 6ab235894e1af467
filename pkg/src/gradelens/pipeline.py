"""End-to-end orchestration: config file -> preprocess -> tune -> evaluate
-> champion artifacts -> roster.

The stages communicate through files under the configured output directory
so partial re-runs are cheap:

    preprocess/   matrix.npz, norm.json, selection_report.json, drop_report.json
    tuning/       tuning.json (grid-search tables for all six models)
    report/       run_report.json + tables/*.csv + figures/*.png
    artifacts/    champion_classification.json, champion_regression.json
    roster/       roster.json, roster.csv

Hyperparameter tuning runs once, on the base seed's training split (the
tuned-hyperparameter tables report one winning configuration per family).
The repeated-run protocol then re-splits with seeds base..base+reps-1 and
retrains both the default and the tuned configuration of every family, so
reported metrics are averages over independent splits. All structured
outputs are byte-deterministic for a fixed config and seed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .errors import ConfigError, GradelensError, StageError
from .evaluation import (
    AggregateReport,
    classification_metrics,
    regression_metrics,
    repeat_runs,
)
from .ingest import load_table, validate_rows
from .models import (
    CLASSIFICATION,
    FOREST,
    LINEAR,
    LOGISTIC,
    REGRESSION,
    TREE,
    ModelConfig,
    default_config,
    fit,
)
from .models.artifact import load_model, save_model
from .models.forest import grow_forest_tree
from .preprocess import (
    DataMatrix,
    NormParams,
    SelectionConfig,
    Split,
    encode_and_normalize,
    impute,
    select_features,
    split,
)
from .risk import RiskConfig, score_roster
from .schema import RawTable, load_schema
from .tuning import ParamGrid, TuneResult, grid_search, shipped_grid

MODEL_SPECS = (
    (LOGISTIC, CLASSIFICATION),
    (TREE, CLASSIFICATION),
    (FOREST, CLASSIFICATION),
    (LINEAR, REGRESSION),
    (TREE, REGRESSION),
    (FOREST, REGRESSION),
)

# tie-break order for champion selection: fewer parameters wins
_SIMPLICITY = {LINEAR: 0, LOGISTIC: 0, TREE: 1, FOREST: 2}

_CLS_METRICS = ("accuracy", "precision", "recall", "f1")
_REG_METRICS = ("mae", "mse", "rmse", "r2")


@dataclass
class PipelineConfig:
    dataset: Path
    schema_path: Path
    delimiter: str = ";"
    strict_drop_cap: bool = True
    selection: SelectionConfig = field(default_factory=SelectionConfig)
    split_seed: int = 42
    repetitions: int = 10
    cv_folds: int = 5
    grids: dict = field(default_factory=dict)  # (family, task) -> ParamGrid
    risk: RiskConfig = field(default_factory=RiskConfig)
    output_dir: Path = Path("out")
    figures: bool = True
    positive_label: int = 1  # 1 = pass is the positive class for P/R/F1

    def grid_for(self, family: str, task: str) -> ParamGrid:
        return self.grids.get((family, task)) or shipped_grid(family, task)


def load_config(path) -> PipelineConfig:
    """Read the pipeline YAML; relative paths resolve against its directory."""
    path = Path(path)
    try:
        doc = yaml.safe_load(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"config {path} is not a mapping")
    base = path.resolve().parent

    def respath(v):
        p = Path(v)
        return p if p.is_absolute() else (base / p)

    sel_doc = doc.get("selection", {})
    keep = sel_doc.get("keep_list")
    selection = SelectionConfig(
        max_missing_fraction=float(sel_doc.get("max_missing_fraction", 0.30)),
        min_variance=float(sel_doc.get("min_variance", 0.0)),
        correlation_cutoff=float(sel_doc.get("correlation_cutoff", 0.85)),
        keep_list=tuple(keep) if keep else None,
    )
    grids = {}
    for family, axes in (doc.get("grids") or {}).items():
        if family not in (LOGISTIC, LINEAR, TREE, FOREST):
            raise ConfigError(f"grids: unknown family {family!r}")
        tasks = {
            LOGISTIC: [CLASSIFICATION],
            LINEAR: [REGRESSION],
            TREE: [CLASSIFICATION, REGRESSION],
            FOREST: [CLASSIFICATION, REGRESSION],
        }[family]
        for task in tasks:
            grids[(family, task)] = ParamGrid.from_mapping(family, task, dict(axes))
    positive = str(doc.get("positive_class", "pass")).lower()
    if positive not in ("pass", "fail"):
        raise ConfigError(f"positive_class must be 'pass' or 'fail', got {positive!r}")
    risk_doc = doc.get("risk", {})
    try:
        return PipelineConfig(
            dataset=respath(doc["dataset"]),
            schema_path=respath(doc["schema"]),
            delimiter=str(doc.get("delimiter", ";")),
            strict_drop_cap=bool(doc.get("strict_drop_cap", True)),
            selection=selection,
            split_seed=int(doc.get("split_seed", 42)),
            repetitions=int(doc.get("repetitions", 10)),
            cv_folds=int(doc.get("cv_folds", 5)),
            grids=grids,
            risk=RiskConfig(
                threshold=float(risk_doc.get("threshold", 0.70)),
                top_k=int(risk_doc.get("top_k", 3)),
            ),
            output_dir=respath(doc.get("output_dir", "out")),
            figures=bool(doc.get("figures", True)),
            positive_label=1 if positive == "pass" else 0,
        )
    except KeyError as exc:
        raise ConfigError(f"config {path}: missing key {exc}") from exc


# -- preprocess stage ------------------------------------------------------


@dataclass
class PreprocessResult:
    table: "RawTable"
    matrix: DataMatrix
    base_split: Split
    student_ids: list[str]
    drop_report: dict
    selection_report: dict
    missing_after_impute: int

    def summary(self) -> dict:
        return {
            "rows": len(self.student_ids),
            "n_features": len(self.matrix.feature_names),
            "features": list(self.matrix.feature_names),
            "missing_after_impute": self.missing_after_impute,
            "drop_report": {
                k: v for k, v in self.drop_report.items() if k != "reasons"
            },
            "selection": self.selection_report,
            "split_sizes": {
                "train": len(self.base_split.train),
                "validation": len(self.base_split.validation),
                "test": len(self.base_split.test),
            },
        }


def run_preprocess(cfg: PipelineConfig) -> PreprocessResult:
    try:
        schema = load_schema(cfg.schema_path)
        table = load_table(cfg.dataset, schema, cfg.delimiter)
        table, drop_report = validate_rows(table, strict_cap=cfg.strict_drop_cap)
    except GradelensError as exc:
        raise StageError("ingest", exc) from exc
    try:
        table = impute(table)
        missing = sum(table.missing_count(c.name) for c in table.schema.predictors)
        table, selection_report = select_features(table, cfg.selection)
        base_split = split(table.n_rows, cfg.split_seed)
        matrix = encode_and_normalize(table, base_split.train)
        id_col = next(
            (c.name for c in table.schema.columns if c.role == "identifier"), None
        )
        if id_col is not None:
            ids = [str(v) for v in table.columns[id_col]]
        else:
            ids = [f"row{i}" for i in range(table.n_rows)]
    except GradelensError as exc:
        raise StageError("preprocess", exc) from exc
    return PreprocessResult(
        table=table,
        matrix=matrix,
        base_split=base_split,
        student_ids=ids,
        drop_report=drop_report.to_dict(),
        selection_report=selection_report.to_dict(),
        missing_after_impute=missing,
    )


def save_preprocess(pre: PreprocessResult, out_dir: Path):
    d = out_dir / "preprocess"
    d.mkdir(parents=True, exist_ok=True)
    np.savez(
        d / "matrix.npz",
        X=pre.matrix.X,
        y_grade=pre.matrix.y_grade,
        y_pass=pre.matrix.y_pass,
        train=pre.base_split.train,
        validation=pre.base_split.validation,
        test=pre.base_split.test,
    )
    _write_selected_csv(d / "selected.csv", pre.table)
    _write_json(d / "norm.json", pre.matrix.norm.to_dict())
    _write_json(d / "selection_report.json", pre.selection_report)
    _write_json(d / "drop_report.json", pre.drop_report)
    _write_json(d / "summary.json", pre.summary())
    with open(d / "student_ids.txt", "w", encoding="utf-8") as fh:
        fh.write("\n".join(pre.student_ids) + "\n")


def _write_selected_csv(path, table):
    # float cells use repr so the reloaded table is value-identical
    names = table.schema.names
    lines = [";".join(names)]
    for i in range(table.n_rows):
        cells = []
        for name in names:
            v = table.columns[name][i]
            cells.append(v if isinstance(v, str) else repr(float(v)))
        lines.append(";".join(cells))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_preprocess(cfg: PipelineConfig) -> PreprocessResult:
    d = cfg.output_dir / "preprocess"
    try:
        data = np.load(d / "matrix.npz")
        norm = NormParams.from_dict(json.loads((d / "norm.json").read_text()))
        selection = json.loads((d / "selection_report.json").read_text())
        drop = json.loads((d / "drop_report.json").read_text())
        summary = json.loads((d / "summary.json").read_text())
        ids = (d / "student_ids.txt").read_text().splitlines()
        schema = load_schema(cfg.schema_path)
        dropped = [
            c.name
            for c in schema.predictors
            if c.name not in set(norm.feature_names)
        ]
        table = load_table(d / "selected.csv", schema.drop_predictors(dropped), ";")
    except (OSError, KeyError, ValueError, GradelensError) as exc:
        raise StageError(
            "preprocess", ConfigError(f"missing or corrupt preprocess outputs in {d}: {exc}")
        ) from exc
    matrix = DataMatrix(
        X=data["X"],
        y_grade=data["y_grade"],
        y_pass=data["y_pass"],
        feature_names=list(norm.feature_names),
        norm=norm,
    )
    base_split = Split(
        train=data["train"], validation=data["validation"], test=data["test"], seed=cfg.split_seed
    )
    return PreprocessResult(
        table=table,
        matrix=matrix,
        base_split=base_split,
        student_ids=ids,
        drop_report=drop,
        selection_report=selection,
        missing_after_impute=int(summary.get("missing_after_impute", 0)),
    )


# -- tuning stage ----------------------------------------------------------


def run_tuning(cfg: PipelineConfig, pre: PreprocessResult) -> dict[str, TuneResult]:
    """Grid-search every family on the base training split with shared folds."""
    X = pre.matrix.X[pre.base_split.train]
    results: dict[str, TuneResult] = {}
    for family, task in MODEL_SPECS:
        y = _target(pre.matrix, task)[pre.base_split.train]
        grid = cfg.grid_for(family, task)
        try:
            results[f"{family}_{task}"] = grid_search(
                grid, X, y, k=cfg.cv_folds, seed=cfg.split_seed
            )
        except GradelensError as exc:
            raise StageError("tune", exc) from exc
    return results


def save_tuning(tuning: dict[str, TuneResult], out_dir: Path):
    d = out_dir / "tuning"
    d.mkdir(parents=True, exist_ok=True)
    _write_json(d / "tuning.json", {k: v.to_dict() for k, v in tuning.items()})


def load_tuning(cfg: PipelineConfig) -> dict[str, TuneResult]:
    path = cfg.output_dir / "tuning" / "tuning.json"
    try:
        doc = json.loads(path.read_text())
    except (OSError, ValueError) as exc:
        raise StageError(
            "tune", ConfigError(f"missing or corrupt tuning output {path}: {exc}")
        ) from exc
    return {k: TuneResult.from_dict(v) for k, v in doc.items()}


def _target(matrix: DataMatrix, task: str) -> np.ndarray:
    return matrix.y_pass.astype(np.float64) if task == CLASSIFICATION else matrix.y_grade


# -- repeated evaluation stage ----------------------------------------------


def _metrics_for(task: str, y_true, prediction, positive: int = 1) -> dict[str, float]:
    if task == CLASSIFICATION:
        proba, labels = prediction
        m = classification_metrics(y_true, labels, positive=positive)
        return {k: getattr(m, k) for k in _CLS_METRICS}
    m = regression_metrics(y_true, prediction)
    return {k: getattr(m, k) for k in _REG_METRICS}


class _ForestStreams:
    """Per-repetition cache of forest tree streams.

    Forest variants that differ only in n_estimators / max_depth share one
    stream; depth-capped evaluation of a deeper tree is bit-identical to
    fitting with that max_depth, and the first k trees are the k-tree
    forest, so cached scores equal individually fitted ones exactly. Every
    variant registers first so each stream grows only as deep and as long
    as its consumers require.
    """

    def __init__(self, X, y, task: str, seed: int):
        self.X, self.y, self.task, self.seed = X, y, task, seed
        self._requirements: dict[tuple, dict] = {}
        self._streams: dict[tuple, list] = {}

    @staticmethod
    def _key(params: dict) -> tuple:
        return (
            bool(params["bootstrap"]),
            int(params["min_samples_split"]),
            int(params["min_samples_leaf"]),
            str(params["max_features"]),
        )

    def register(self, params: dict):
        key = self._key(params)
        req = self._requirements.setdefault(key, {"n": 0, "depth": 0})
        req["n"] = max(req["n"], int(params["n_estimators"]))
        if req["depth"] is not None:
            depth = params["max_depth"]
            req["depth"] = None if depth is None else max(req["depth"], int(depth))

    def trees(self, params: dict) -> list:
        self.register(params)
        key = self._key(params)
        req = self._requirements[key]
        stream = self._streams.setdefault(key, [])
        if len(stream) < req["n"]:
            grow_params = dict(params)
            grow_params["max_depth"] = req["depth"]
            for i in range(len(stream), req["n"]):
                stream.append(
                    grow_forest_tree(self.X, self.y, self.task, grow_params, self.seed + i)
                )
        return stream[: int(params["n_estimators"])]

    def predict(self, params: dict, X_eval) -> object:
        from .models.forest import aggregate_tree_values

        trees = self.trees(params)
        cap = params["max_depth"]
        cap = None if cap is None else int(cap)
        agg = aggregate_tree_values(
            np.stack([t.node_values(X_eval, cap) for t in trees])
        )
        if self.task == CLASSIFICATION:
            proba = agg[:, 1]
            return proba, (proba >= 0.5).astype(np.int64)
        return agg


def evaluate_repetitions(
    cfg: PipelineConfig, pre: PreprocessResult, tuning: dict[str, TuneResult]
) -> AggregateReport:
    """Average default and tuned metrics over freshly seeded splits.

    Every repetition re-splits the data, retrains each family's default and
    tuned configurations on the training rows, and scores validation and
    test. Metric keys look like ``tree_regression_tuned_test_r2``.
    """
    from .models import predict

    n = pre.table.n_rows

    def run_once(seed: int) -> dict[str, float]:
        sp = split(n, seed)
        # normalization statistics are refit on this repetition's own
        # training rows, exactly as in a fresh pipeline run
        matrix = encode_and_normalize(pre.table, sp.train)
        out: dict[str, float] = {}
        for task in (CLASSIFICATION, REGRESSION):
            y_all = _target(matrix, task)
            Xtr = matrix.X[sp.train]
            ytr = y_all[sp.train]
            surfaces = {"validation": sp.validation, "test": sp.test}
            streams = _ForestStreams(Xtr, ytr, task, seed)
            for family, t in MODEL_SPECS:
                if t != task:
                    continue
                key = f"{family}_{task}"
                variants = {
                    "default": default_config(family, task, seed),
                    "tuned": tuning[key].best_config.with_seed(seed),
                }
                if family == FOREST:
                    for mcfg in variants.values():
                        streams.register(mcfg.resolved())
                for variant, mcfg in variants.items():
                    if family == FOREST:
                        predictor = lambda Xe, c=mcfg: streams.predict(c.resolved(), Xe)
                    else:
                        model = fit(mcfg, Xtr, ytr, matrix.feature_names)
                        predictor = lambda Xe, m=model: predict(m, Xe)
                    for surface, rows in surfaces.items():
                        metrics = _metrics_for(
                            task, y_all[rows], predictor(matrix.X[rows]), cfg.positive_label
                        )
                        for name, value in metrics.items():
                            out[f"{key}_{variant}_{surface}_{name}"] = value
        return out

    try:
        return repeat_runs(run_once, cfg.repetitions, cfg.split_seed)
    except GradelensError as exc:
        raise StageError("evaluate", exc) from exc


# -- champion training and roster -------------------------------------------


def _primary_key(family: str, task: str, surface: str = "test") -> str:
    metric = "accuracy" if task == CLASSIFICATION else "r2"
    return f"{family}_{task}_tuned_{surface}_{metric}"


def select_champions(aggregate: AggregateReport) -> dict[str, str]:
    """Best tuned family per task by mean test primary metric (ties: simpler)."""
    champions = {}
    for task in (CLASSIFICATION, REGRESSION):
        candidates = [f for f, t in MODEL_SPECS if t == task]
        best = None
        for family in candidates:
            score = aggregate.mean(_primary_key(family, task))
            rank = (score, -_SIMPLICITY[family])
            if best is None or rank > best[0]:
                best = (rank, family)
        champions[task] = best[1]
    return champions


def train_champions(
    cfg: PipelineConfig,
    pre: PreprocessResult,
    tuning: dict[str, TuneResult],
    champions: dict[str, str],
) -> dict[str, Path]:
    """Fit each task's champion on the base training split and save artifacts."""
    d = cfg.output_dir / "artifacts"
    d.mkdir(parents=True, exist_ok=True)
    matrix = pre.matrix
    paths = {}
    for task, family in champions.items():
        mcfg = tuning[f"{family}_{task}"].best_config.with_seed(cfg.split_seed)
        Xtr = matrix.X[pre.base_split.train]
        ytr = _target(matrix, task)[pre.base_split.train]
        model = fit(mcfg, Xtr, ytr, matrix.feature_names)
        fingerprint = {
            "n_rows": int(Xtr.shape[0]),
            "n_features": int(Xtr.shape[1]),
            "seed": cfg.split_seed,
        }
        path = d / f"champion_{task}.json"
        save_model(model, mcfg, matrix.norm, fingerprint, path)
        paths[task] = path
    return paths


def build_roster(cfg: PipelineConfig, pre: PreprocessResult, artifact_paths: dict) -> list:
    cls_art = load_model(artifact_paths[CLASSIFICATION])
    reg_art = load_model(artifact_paths[REGRESSION])
    scores = score_roster(
        pre.matrix.X,
        pre.student_ids,
        cls_art.model,
        reg_art.model,
        cls_art.norm,
        cfg.risk,
    )
    return scores


def save_roster(scores: list, out_dir: Path):
    d = out_dir / "roster"
    d.mkdir(parents=True, exist_ok=True)
    _write_json(d / "roster.json", {"roster": [s.to_dict() for s in scores]})
    lines = ["student_id;p_fail;flagged;predicted_grade;top_contributions"]
    for s in scores:
        contrib = "|".join(f"{name}:{value!r}" for name, value in s.contributions)
        lines.append(
            f"{s.student_id};{s.p_fail!r};{int(s.flagged)};{s.predicted_grade!r};{contrib}"
        )
    (d / "roster.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")


# -- full run ----------------------------------------------------------------


def run_pipeline(cfg: PipelineConfig) -> dict:
    """All stages; returns the run report document."""
    from .report import write_report

    pre = run_preprocess(cfg)
    save_preprocess(pre, cfg.output_dir)
    tuning = run_tuning(cfg, pre)
    save_tuning(tuning, cfg.output_dir)
    aggregate = evaluate_repetitions(cfg, pre, tuning)
    champions = select_champions(aggregate)
    artifact_paths = train_champions(cfg, pre, tuning, champions)
    roster = build_roster(cfg, pre, artifact_paths)
    save_roster(roster, cfg.output_dir)
    report = build_run_report(cfg, pre, tuning, aggregate, champions, artifact_paths)
    write_report(cfg, report, aggregate)
    return report


def build_run_report(
    cfg: PipelineConfig,
    pre: PreprocessResult,
    tuning: dict[str, TuneResult],
    aggregate: AggregateReport,
    champions: dict[str, str],
    artifact_paths: dict,
) -> dict:
    evaluation = {}
    for family, task in MODEL_SPECS:
        key = f"{family}_{task}"
        names = _CLS_METRICS if task == CLASSIFICATION else _REG_METRICS
        entry = {"cv_default": tuning[key].default_score, "cv_tuned": tuning[key].best_cv_score}
        for variant in ("default", "tuned"):
            for surface in ("validation", "test"):
                entry[f"{variant}_{surface}"] = {
                    name: {
                        "mean": aggregate.mean(f"{key}_{variant}_{surface}_{name}"),
                        "std": aggregate.std(f"{key}_{variant}_{surface}_{name}"),
                    }
                    for name in names
                }
        evaluation[key] = entry
    return {
        "config": {
            "dataset": cfg.dataset.name,
            "split_seed": cfg.split_seed,
            "repetitions": cfg.repetitions,
            "cv_folds": cfg.cv_folds,
            "risk_threshold": cfg.risk.threshold,
        },
        "seeds": {
            "split_seed": cfg.split_seed,
            "repetition_seeds": aggregate.seeds,
        },
        "preprocess": pre.summary(),
        "tuning": {k: v.to_dict() for k, v in tuning.items()},
        "evaluation": evaluation,
        "repetition_runs": aggregate.to_dict(),
        "champions": {
            task: {
                "family": family,
                "config": tuning[f"{family}_{task}"].best_config.to_dict(),
                "artifact": str(Path(artifact_paths[task]).name),
                "mean_test_primary": aggregate.mean(_primary_key(family, task)),
            }
            for task, family in champions.items()
        },
    }


def _write_json(path, doc):
    Path(path).write_text(
        json.dumps(doc, sort_keys=True, indent=1, separators=(",", ": ")) + "\n",
        encoding="utf-8",
    )
