"""Command-line entry point: ``seizurebench {run,eda,predict}``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import dataset as ds
from . import preprocess as pp
from .errors import DataFormatError, PipelineError, SeizureBenchError
from .experiment import (
    DEFAULT_SEED,
    MODES,
    NORMALIZATIONS,
    ExperimentConfig,
    emit_report,
    read_config_file,
    run_experiment,
    save_models,
    stage,
    write_correlation_csv,
)
from .models import KINDS, load_model, predict_proba

log = logging.getLogger("seizurebench")


def _models_arg(text: str) -> tuple[str, ...]:
    models = tuple(m.strip() for m in text.split(",") if m.strip())
    bad = [m for m in models if m not in KINDS]
    if bad:
        raise argparse.ArgumentTypeError(f"unknown model(s) {bad}; choose from {', '.join(KINDS)}")
    return models


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="seizurebench",
        description="Binary seizure recognition benchmark on the UCI EEG table.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="preprocess, train all models, write the report")
    run.add_argument("--data", help="path to the seizure CSV (required unless set in --config)")
    run.add_argument("--config", help="INI config file; command-line flags win over it")
    run.add_argument("--mode", choices=MODES, help="pipeline order (default: paper)")
    run.add_argument("--seed", type=int, help=f"master seed (default: {DEFAULT_SEED})")
    run.add_argument("--out", default="results", help="output directory (default: results)")
    run.add_argument("--models", type=_models_arg,
                     help="comma-separated subset of: " + ", ".join(KINDS))
    run.add_argument("--test-fraction", type=float)
    run.add_argument("--iqr-k", type=float)
    run.add_argument("--normalization", choices=NORMALIZATIONS)
    run.add_argument("--jobs", type=int, help="threads for ensemble training (results unchanged)")
    run.add_argument("--save-models", action="store_true",
                     help="also write <out>/models/<kind>.json for use with `predict`")

    eda = sub.add_parser("eda", help="class/feature summary and correlation matrix")
    eda.add_argument("--data", required=True)
    eda.add_argument("--out", default="eda")
    eda.add_argument("--normalization", choices=NORMALIZATIONS, default="minmax")
    eda.add_argument("--iqr-k", type=float, default=1.5)

    pr = sub.add_parser("predict", help="score rows with a saved model")
    pr.add_argument("--model", required=True, help="model JSON written by `run --save-models`")
    pr.add_argument("--data", required=True,
                    help="CSV of 178-feature rows, or the UCI layout (id, 178 features, label)")
    pr.add_argument("--out", help="output CSV (default: stdout)")
    pr.add_argument("--no-header", action="store_true", help="input has no header row")
    pr.add_argument("--threshold", type=float, default=0.5)
    return parser


def _cmd_run(args) -> int:
    kwargs = read_config_file(args.config) if args.config else {}
    flag_map = {
        "data": "dataset_path", "mode": "mode", "seed": "seed", "models": "models",
        "test_fraction": "test_fraction", "iqr_k": "iqr_k",
        "normalization": "normalization", "jobs": "n_jobs",
    }
    for flag, key in flag_map.items():
        value = getattr(args, flag)
        if value is not None:
            kwargs[key] = value
    if "dataset_path" not in kwargs:
        raise _UsageError("run: --data is required (or set `data` in the [experiment] config)")
    cfg = ExperimentConfig(**kwargs)
    report = run_experiment(cfg, keep_models=args.save_models)
    paths = emit_report(report, args.out)
    if args.save_models:
        paths += save_models(report, Path(args.out) / "models")
    for r in report.results:
        m = r.metrics
        print(f"{r.kind:20s} accuracy {100 * m.accuracy:6.2f}%  auc {r.roc.auc:.4f}  "
              f"misclassified {m.misclassified}/{r.confusion.total}")
    print(f"wrote {len(paths)} files to {args.out}")
    return 0


def _cmd_eda(args) -> int:
    with stage("load"):
        raw = ds.load_csv(args.data)
    with stage("eda"):
        summary = ds.summarize(raw)
        X = pp.apply_normalizer(pp.fit_normalizer(raw.features, args.normalization), raw.features)
        X, outliers = pp.replace_outliers(X, args.iqr_k)
        corr = pp.compute_correlation_matrix(X)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    doc = summary.to_dict()
    doc["outliers_replaced"] = outliers.total_replaced
    (out / "eda.json").write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
    write_correlation_csv(corr, out / "correlation.csv")
    counts = ", ".join(f"{k}: {v}" for k, v in sorted(summary.class_counts.items()))
    print(f"{summary.total_rows} rows; class counts {counts}; "
          f"{outliers.total_replaced} outlier cells")
    print(f"wrote {out / 'eda.json'} and {out / 'correlation.csv'}")
    return 0


def _read_feature_rows(path, n_features: int, has_header: bool):
    ids, rows = [], []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        if has_header:
            next(reader, None)
        for i, rec in enumerate(reader):
            if not rec:
                continue
            if len(rec) == n_features:
                rid, cells = str(i), rec
            elif len(rec) == n_features + 2:
                rid, cells = rec[0], rec[1:-1]
            else:
                raise DataFormatError(
                    f"row {i}: expected {n_features} or {n_features + 2} columns, found {len(rec)}"
                )
            try:
                rows.append([float(c) for c in cells])
            except ValueError:
                raise DataFormatError(f"row {i}: non-numeric feature value") from None
            ids.append(rid)
    if not rows:
        raise DataFormatError(f"{path}: no data rows")
    return ids, np.asarray(rows, dtype=np.float64)


def _cmd_predict(args) -> int:
    with stage("load-model"):
        model, doc = load_model(args.model)
    with stage("load"):
        ids, X = _read_feature_rows(args.data, model.n_features, not args.no_header)
    with stage("preprocess"):
        prep = doc.get("preprocessing")
        if prep:
            X = pp.apply_normalizer(pp.normalizer_from_dict(prep["normalizer"]), X)
            o = prep["outliers"]
            fitted = pp.OutlierReport(
                0, np.zeros(len(o["lower"]), dtype=np.int64), np.asarray(o["lower"]),
                np.asarray(o["upper"]), np.asarray(o["medians"]), float(o["k"]),
            )
            X, _ = pp.apply_outlier_repair(fitted, X)
    with stage("predict"):
        scores = predict_proba(model, X)
    fh = open(args.out, "w", newline="", encoding="utf-8") if args.out else sys.stdout
    try:
        w = csv.writer(fh)
        w.writerow(["id", "score", "prediction"])
        for rid, s in zip(ids, scores):
            w.writerow([rid, repr(float(s)), int(s >= args.threshold)])
    finally:
        if args.out:
            fh.close()
    return 0


class _UsageError(Exception):
    pass


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handlers = {"run": _cmd_run, "eda": _cmd_eda, "predict": _cmd_predict}
    try:
        return handlers[args.command](args)
    except _UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"seizurebench: error: {exc}", file=sys.stderr)
        return 2
    except PipelineError as exc:
        print(f"seizurebench: error in stage {exc.stage}: {exc.cause}", file=sys.stderr)
        return 1
    except (SeizureBenchError, ValueError, OSError) as exc:
        print(f"seizurebench: error in stage config: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
