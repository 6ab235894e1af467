"""Command-line entry point.

Verbs cover the full pipeline, each consuming the prior stage's files:

    gradelens preprocess --config configs/reference.yaml
    gradelens tune       --config ...     (needs preprocess outputs)
    gradelens evaluate   --config ...     (needs preprocess + tune)
    gradelens train      --config ...     (champion artifacts)
    gradelens score      --config ...     (roster from artifacts)
    gradelens run        --config ...     (all of the above)
    gradelens serve      --config ... --port 8080 --token-env GRADELENS_TOKEN

Stage failures exit nonzero and print the stage name with a machine
readable code.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import pipeline as pl
from .errors import GradelensError, StageError
from .risk import RiskConfig
from .schema import load_schema
from .service import build_state, serve


def _add_common(p):
    p.add_argument("--config", required=True, help="pipeline YAML")
    p.add_argument("--seed", type=int, default=None, help="override split seed")
    p.add_argument("--out", default=None, help="override output directory")
    p.add_argument("--repetitions", type=int, default=None, help="override repetitions")


def _load_cfg(args) -> pl.PipelineConfig:
    cfg = pl.load_config(args.config)
    if args.seed is not None:
        cfg.split_seed = args.seed
    if args.out is not None:
        cfg.output_dir = Path(args.out)
    if getattr(args, "repetitions", None) is not None:
        if args.repetitions < 1:
            raise GradelensError("repetitions must be >= 1")
        cfg.repetitions = args.repetitions
    return cfg


def cmd_preprocess(args):
    cfg = _load_cfg(args)
    pre = pl.run_preprocess(cfg)
    pl.save_preprocess(pre, cfg.output_dir)
    summary = pre.summary()
    print(
        f"preprocess: {summary['rows']} rows, {summary['n_features']} features kept, "
        f"{summary['drop_report']['rows_dropped']} rows dropped, "
        f"missing after imputation = {summary['missing_after_impute']}"
    )


def cmd_tune(args):
    cfg = _load_cfg(args)
    pre = pl.load_preprocess(cfg)
    tuning = pl.run_tuning(cfg, pre)
    pl.save_tuning(tuning, cfg.output_dir)
    for key, result in tuning.items():
        print(
            f"tune {key}: default={result.default_score:.6f} "
            f"best={result.best_cv_score:.6f} "
            f"params={result.best_config.hyperparameters}"
        )


def cmd_evaluate(args):
    cfg = _load_cfg(args)
    pre = pl.load_preprocess(cfg)
    tuning = pl.load_tuning(cfg)
    aggregate = pl.evaluate_repetitions(cfg, pre, tuning)
    champions = pl.select_champions(aggregate)
    artifact_paths = {
        task: cfg.output_dir / "artifacts" / f"champion_{task}.json"
        for task in champions
    }
    report = pl.build_run_report(cfg, pre, tuning, aggregate, champions, artifact_paths)
    from .report import write_report

    write_report(cfg, report, aggregate)
    for task, family in champions.items():
        print(f"evaluate: {task} champion = {family} "
              f"(mean test primary = {report['champions'][task]['mean_test_primary']:.6f})")
    print(f"report written to {cfg.output_dir / 'report'}")


def cmd_train(args):
    cfg = _load_cfg(args)
    pre = pl.load_preprocess(cfg)
    tuning = pl.load_tuning(cfg)
    aggregate = pl.evaluate_repetitions(cfg, pre, tuning)
    champions = pl.select_champions(aggregate)
    paths = pl.train_champions(cfg, pre, tuning, champions)
    for task, path in paths.items():
        print(f"train: {task} champion artifact -> {path}")


def cmd_score(args):
    cfg = _load_cfg(args)
    pre = pl.load_preprocess(cfg)
    paths = {
        task: cfg.output_dir / "artifacts" / f"champion_{task}.json"
        for task in ("classification", "regression")
    }
    roster = pl.build_roster(cfg, pre, paths)
    pl.save_roster(roster, cfg.output_dir)
    flagged = sum(1 for s in roster if s.flagged)
    print(f"score: {len(roster)} students, {flagged} flagged at threshold {cfg.risk.threshold}")


def cmd_run(args):
    cfg = _load_cfg(args)
    report = pl.run_pipeline(cfg)
    for task, champ in report["champions"].items():
        print(f"run: {task} champion = {champ['family']} "
              f"(mean test primary = {champ['mean_test_primary']:.6f})")
    print(f"outputs in {cfg.output_dir}")


def cmd_serve(args):
    cfg = _load_cfg(args)
    schema = load_schema(cfg.schema_path)
    art_dir = Path(args.artifacts) if args.artifacts else cfg.output_dir / "artifacts"
    roster_path = (
        Path(args.roster) if args.roster else cfg.output_dir / "roster" / "roster.json"
    )
    roster_doc = {}
    if roster_path.exists():
        roster_doc = json.loads(roster_path.read_text())
    metrics = None
    report_path = cfg.output_dir / "report" / "run_report.json"
    if report_path.exists():
        metrics = json.loads(report_path.read_text()).get("evaluation")
    state = build_state(
        art_dir / "champion_classification.json",
        art_dir / "champion_regression.json",
        schema,
        roster_doc,
        RiskConfig(threshold=cfg.risk.threshold, top_k=cfg.risk.top_k),
        metrics=metrics,
        token_env=args.token_env,
    )
    static_dir = Path(args.static_dir) if args.static_dir else None
    mode = "token auth" if state.token else "open (no token set)"
    print(f"serving on port {args.port} [{mode}]"
          + (f", static assets from {static_dir}" if static_dir else ""))
    serve(state, port=args.port, static_dir=static_dir)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gradelens",
        description="dual-task student performance engine: risk flags and grade prediction",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in (
        ("preprocess", cmd_preprocess),
        ("tune", cmd_tune),
        ("evaluate", cmd_evaluate),
        ("train", cmd_train),
        ("score", cmd_score),
        ("run", cmd_run),
    ):
        p = sub.add_parser(name)
        _add_common(p)
        p.set_defaults(fn=fn)
    p = sub.add_parser("serve")
    _add_common(p)
    p.add_argument("--port", type=int, default=8080)
    p.add_argument("--token-env", default="GRADELENS_TOKEN")
    p.add_argument("--artifacts", default=None, help="artifact directory override")
    p.add_argument("--roster", default=None, help="roster.json override")
    p.add_argument("--static-dir", default=None, help="serve dashboard assets from here")
    p.set_defaults(fn=cmd_serve)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.fn(args)
    except StageError as exc:
        print(f"error [{exc.code}]: {exc}", file=sys.stderr)
        return 1
    except GradelensError as exc:
        print(f"error [{exc.code}]: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
