"""Command-line entry point.

Verbs: encode, augment, train, evaluate, run, report.  Exit codes:
0 success, 2 configuration error, 3 data error, 4 numeric failure.
`train` fits on every row it is given; the 70:30 experiment split
belongs to `run`.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .augment import stage_augmented_images
from .classifier import SoftmaxClassifier, load_model, save_model
from .codec import MetadataTable, encode_table, encode_with_widths, load_metadata_csv
from .errors import ConfigError, DataError, FeatFuseError, NumericError
from .featureio import (
    FeatureMatrix,
    align_to_ids,
    labels_from_names,
    load_labels_csv,
    read_features,
    write_features,
)
from .fusion import fuse
from .metrics import evaluate_predictions
from .runner import (
    emit_reports,
    load_config,
    load_records,
    report_csv_lines,
    run_experiment,
)

ENCODED_EXTRACTOR_NAME = "ascii_metadata"


def _parse_fields(text: str | None) -> tuple[str, ...]:
    if not text:
        return ()
    fields = tuple(f.strip() for f in text.split(",") if f.strip())
    if not fields:
        raise ConfigError(f"no field names in {text!r}")
    return fields


def _load_selected_metadata(path, fields: tuple[str, ...], id_column: str):
    ids, table = load_metadata_csv(path, id_column=id_column)
    if fields:
        table = table.select(fields)
    return ids, table


def _cmd_encode(args) -> int:
    ids, table = _load_selected_metadata(
        args.metadata, _parse_fields(args.fields), args.id_column
    )
    enc = encode_table(table)
    matrix = FeatureMatrix(
        data=enc.values.astype(np.float32),
        sample_ids=ids,
        extractor_name=ENCODED_EXTRACTOR_NAME,
    )
    write_features(matrix, args.output)
    widths = [w for _, w in enc.field_spans]
    print(f"encoded {matrix.n_samples} rows, {enc.width} columns -> {args.output}")
    for name, width in zip(table.field_names, widths):
        print(f"  {name}: width {width}")
    return 0


def _cmd_augment(args) -> int:
    records = stage_augmented_images(args.input, args.output, seed=args.seed)
    print(f"augmented {len(records)} images -> {args.output} (seed {args.seed})")
    return 0


def _metadata_design(features, args, fields, widths=None):
    """Encoded metadata aligned to the feature rows; widths pin the layout."""
    ids, table = _load_selected_metadata(args.metadata, fields, args.id_column)
    order = align_to_ids(features.sample_ids, ids, f"metadata {args.metadata}")
    table = MetadataTable(
        field_names=table.field_names,
        records=tuple(table.records[i] for i in order),
    )
    if widths is None:
        return encode_table(table)
    return encode_with_widths(table, tuple(widths))


def _cmd_train(args) -> int:
    features = read_features(args.features)
    label_ids, label_names = load_labels_csv(args.labels)
    order = align_to_ids(features.sample_ids, label_ids, f"labels {args.labels}")
    y = labels_from_names([label_names[i] for i in order])

    extras = {"modality": "image_only"}
    if args.metadata:
        fields = _parse_fields(args.fields)
        if not fields:
            raise ConfigError("--metadata requires --fields naming the columns to use")
        encoded = _metadata_design(features, args, fields)
        design = fuse(features, encoded).data
        extras = {
            "modality": "fused",
            "metadata_fields": list(fields),
            "metadata_widths": [w for _, w in encoded.field_spans],
        }
    else:
        design = features.data

    clf = SoftmaxClassifier(
        learning_rate=args.learning_rate,
        max_epochs=args.max_epochs,
        gradient_tolerance=args.gradient_tolerance,
        adaptive_rate=not args.constant_rate,
        standardize=not args.no_standardize,
        seed=args.seed,
    )
    clf.fit(design, y)
    save_model(clf, args.output, extras=extras)
    t = clf.trace_
    print(
        f"trained on {design.shape[0]} samples, d={design.shape[1]}, "
        f"k={len(clf.class_names_)} -> {args.output}"
    )
    print(
        f"  epochs={t.epochs} final_grad_norm={t.final_grad_norm:.3e} "
        f"stop={t.stop_reason!r} wall={t.wall_seconds:.2f}s"
    )
    return 0


def _cmd_evaluate(args) -> int:
    clf = load_model(args.model)
    extras = getattr(clf, "container_extras_", {}) or {}
    features = read_features(args.features)
    label_ids, label_names = load_labels_csv(args.labels)
    order = align_to_ids(features.sample_ids, label_ids, f"labels {args.labels}")
    y = labels_from_names(
        [label_names[i] for i in order], class_names=clf.class_names_
    )

    if extras.get("modality") == "fused":
        if not args.metadata:
            raise ConfigError(
                "model was trained with metadata; pass --metadata with the same fields"
            )
        fields = tuple(extras["metadata_fields"])
        widths = tuple(int(w) for w in extras["metadata_widths"])
        encoded = _metadata_design(features, args, fields, widths=widths)
        design = fuse(features, encoded).data
    else:
        design = features.data

    proba = clf.predict_proba(design)
    report = evaluate_predictions(y.labels, proba, clf.class_names_)
    headers = [
        f"# model={args.model}",
        f"# features={args.features}",
        f"# n_test={report.n_test}",
    ]
    lines = report_csv_lines(report, headers)
    Path(args.output).write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"evaluated {report.n_test} samples -> {args.output}")
    print(
        f"  macro: accuracy={report.macro.accuracy:.4f} "
        f"f_measure={report.macro.f_measure:.4f} auroc={report.macro_auroc:.4f}"
    )
    return 0


def _cmd_run(args) -> int:
    cfg = load_config(
        args.config,
        output_dir=args.output,
        split_seed=args.split_seed,
        train_seed=args.train_seed,
        workers=args.workers,
    )
    result = run_experiment(cfg)
    written = emit_reports(
        result,
        cfg.output_dir,
        execution={"workers": cfg.workers, "output_dir": str(cfg.output_dir)},
    )
    print(
        f"ran {len(result.records)} cells over "
        f"{len(cfg.feature_files)} extractor(s); {len(result.deltas)} delta report(s)"
    )
    print(f"  split {result.split_fingerprint}: "
          f"{result.n_train} train / {result.n_test} test")
    print(f"  wrote {len(written)} files under {cfg.output_dir}")
    return 0


def _cmd_report(args) -> int:
    result = load_records(args.records)
    written = emit_reports(result, args.output)
    print(
        f"re-emitted {len(written)} files for {len(result.records)} record(s) "
        f"-> {args.output}"
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="featfuse",
        description=(
            "Train and evaluate softmax classifiers over deep image features "
            "fused with ASCII-decimal encoded metadata."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("encode", help="encode a metadata CSV to a feature file")
    p.add_argument("--metadata", required=True, help="metadata CSV path")
    p.add_argument("--fields", help="comma-separated field names (default: all)")
    p.add_argument("--id-column", default="sample_id")
    p.add_argument("--output", required=True, help="output feature file")
    p.set_defaults(func=_cmd_encode)

    p = sub.add_parser("augment", help="stage an augmented copy of an image directory")
    p.add_argument("--input", required=True, help="source image directory")
    p.add_argument("--output", required=True, help="staging directory (PNG)")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_augment)

    p = sub.add_parser("train", help="fit a softmax model on a feature file")
    p.add_argument("--features", required=True, help="feature file")
    p.add_argument("--labels", required=True, help="labels CSV")
    p.add_argument("--metadata", help="metadata CSV (makes the model fused)")
    p.add_argument("--fields", help="comma-separated metadata fields")
    p.add_argument("--id-column", default="sample_id")
    p.add_argument("--output", required=True, help="model file to write")
    p.add_argument("--learning-rate", type=float, default=0.1)
    p.add_argument("--max-epochs", type=int, default=2000)
    p.add_argument("--gradient-tolerance", type=float, default=1e-6)
    p.add_argument("--constant-rate", action="store_true",
                   help="disable the halving retry on loss increases")
    p.add_argument("--no-standardize", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("evaluate", help="score a model against labeled features")
    p.add_argument("--model", required=True, help="model file")
    p.add_argument("--features", required=True, help="feature file")
    p.add_argument("--labels", required=True, help="labels CSV")
    p.add_argument("--metadata", help="metadata CSV (required for fused models)")
    p.add_argument("--id-column", default="sample_id")
    p.add_argument("--output", required=True, help="report CSV to write")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("run", help="run the full experiment grid from a config file")
    p.add_argument("--config", required=True, help="experiment config (YAML)")
    p.add_argument("--output", help="override the config's output_dir")
    p.add_argument("--split-seed", type=int, help="override split.seed")
    p.add_argument("--train-seed", type=int, help="override train.seed")
    p.add_argument("--workers", type=int, help="override worker count")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("report", help="re-emit report files from records.json")
    p.add_argument("--records", required=True, help="records.json from a run")
    p.add_argument("--output", required=True, help="directory to write into")
    p.set_defaults(func=_cmd_report)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except FeatFuseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
