"""Experiment orchestration: config, the 2x2 run grid, reports.

One experiment trains up to four models per extractor — {image_only,
fused} x {unprocessed, augmented} — on a single fixed train/test split
shared by every cell, then emits per-run metric tables, bar and boxplot
plot-data for the fused-minus-image deltas, and a runtime table.

Report files fall into two groups.  The deterministic group
(``report_*.csv``, ``deltas_bars.csv``, ``auroc_deltas_boxplot.csv``,
``auroc_delta_summary.csv``, ``resolved_config.yaml``) is byte-identical
across reruns of the same config.  The timing group (``runtimes.csv``,
``records.json``, ``manifest.json``) carries wall-clock measurements and
the run timestamp, which vary between runs by nature.
"""

from __future__ import annotations

import json
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from hashlib import sha256
from pathlib import Path

import numpy as np
import yaml

from .classifier import SoftmaxClassifier, TrainConfig
from .codec import MetadataTable, encode_table, load_metadata_csv
from .errors import (
    ConfigError,
    DataError,
    FeatFuseError,
    NumericError,
    StructuralError,
)
from .featureio import (
    FeatureMatrix,
    align_to_ids,
    fixed_split,
    labels_from_names,
    load_labels_csv,
    read_features,
)
from .fusion import fuse
from .metrics import (
    MEASURES,
    ClassMetrics,
    ConfusionMatrix,
    DeltaReport,
    EvaluationReport,
    delta_report,
    evaluate_predictions,
)

MODALITIES = ("image_only", "fused")
PROCESSINGS = ("unprocessed", "augmented")

TIMING_FILES = ("runtimes.csv", "records.json", "manifest.json")

_RECORDS_FORMAT = 1


def _as_path(value, base: Path) -> Path:
    p = Path(value)
    return p if p.is_absolute() else base / p


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything one `run` needs; see load_config for the file schema."""

    feature_files: dict[str, Path]
    labels_csv: Path
    output_dir: Path
    metadata_csv: Path | None = None
    metadata_fields: tuple[str, ...] = ()
    augmented_feature_files: dict[str, Path] = field(default_factory=dict)
    image_only: bool = True
    fused: bool = True
    include_augmented: bool = False
    split_seed: int = 0
    train_fraction: float = 0.7
    stratify: bool = False
    train: TrainConfig = field(default_factory=TrainConfig)
    standardize: bool = True
    workers: int = 1

    def __post_init__(self):
        if not self.feature_files:
            raise ConfigError("at least one feature file is required")
        for name in self.feature_files:
            if not name or not isinstance(name, str):
                raise ConfigError(f"invalid extractor name {name!r}")
        if not (self.image_only or self.fused):
            raise ConfigError("no variants enabled: need image_only and/or fused")
        if self.fused:
            if self.metadata_csv is None:
                raise ConfigError("fused variant requested without metadata_csv")
            if not self.metadata_fields:
                raise ConfigError("fused variant requested with empty metadata_fields")
        if self.include_augmented:
            missing = sorted(set(self.feature_files) - set(self.augmented_feature_files))
            if missing:
                raise ConfigError(
                    f"augmented variant requested but no augmented features for: {missing}"
                )
            extra = sorted(set(self.augmented_feature_files) - set(self.feature_files))
            if extra:
                raise ConfigError(
                    f"augmented features for unknown extractors: {extra}"
                )
        if not 0.0 < self.train_fraction < 1.0:
            raise ConfigError(
                f"train_fraction must lie in (0, 1), got {self.train_fraction}"
            )
        if self.split_seed < 0:
            raise ConfigError(f"split_seed must be non-negative, got {self.split_seed}")
        if self.workers < 1:
            raise ConfigError(f"workers must be at least 1, got {self.workers}")

    @property
    def modalities(self) -> tuple[str, ...]:
        return tuple(
            m
            for m, on in (("image_only", self.image_only), ("fused", self.fused))
            if on
        )

    @property
    def processings(self) -> tuple[str, ...]:
        return PROCESSINGS if self.include_augmented else PROCESSINGS[:1]

    def semantic_dict(self) -> dict:
        """The config content that defines the experiment's identity.

        output_dir and workers are execution details and stay out, so the
        same experiment run into two directories fingerprints identically.
        """
        d = {
            "feature_files": {k: str(v) for k, v in sorted(self.feature_files.items())},
            "labels_csv": str(self.labels_csv),
            "metadata_csv": None if self.metadata_csv is None else str(self.metadata_csv),
            "metadata_fields": list(self.metadata_fields),
            "variants": {
                "image_only": self.image_only,
                "fused": self.fused,
                "augmented": self.include_augmented,
            },
            "split": {
                "seed": self.split_seed,
                "train_fraction": self.train_fraction,
                "stratify": self.stratify,
            },
            "train": {
                "learning_rate": self.train.learning_rate,
                "max_epochs": self.train.max_epochs,
                "gradient_tolerance": self.train.gradient_tolerance,
                "adaptive_rate": self.train.adaptive_rate,
                "standardize": self.standardize,
                "seed": self.train.seed,
            },
        }
        if self.augmented_feature_files:
            d["augmented_feature_files"] = {
                k: str(v) for k, v in sorted(self.augmented_feature_files.items())
            }
        return d

    def fingerprint(self) -> str:
        blob = json.dumps(self.semantic_dict(), sort_keys=True).encode("utf-8")
        return sha256(blob).hexdigest()[:16]


_TOP_KEYS = {
    "feature_files",
    "augmented_feature_files",
    "metadata_csv",
    "labels_csv",
    "metadata_fields",
    "variants",
    "split",
    "train",
    "output_dir",
    "workers",
}
_VARIANT_KEYS = {"image_only", "fused", "augmented"}
_SPLIT_KEYS = {"seed", "train_fraction", "stratify"}
_TRAIN_KEYS = {
    "learning_rate",
    "max_epochs",
    "gradient_tolerance",
    "adaptive_rate",
    "standardize",
    "seed",
}


def _check_keys(mapping: dict, allowed: set, where: str) -> None:
    unknown = sorted(set(mapping) - allowed)
    if unknown:
        raise ConfigError(f"unknown {where} keys: {unknown} (allowed: {sorted(allowed)})")


def _file_map(raw, base: Path, where: str) -> dict[str, Path]:
    if not isinstance(raw, dict) or not all(isinstance(k, str) for k in raw):
        raise ConfigError(f"{where} must map extractor names to file paths")
    return {k: _as_path(v, base) for k, v in raw.items()}


def load_config(
    path,
    output_dir=None,
    split_seed: int | None = None,
    train_seed: int | None = None,
    workers: int | None = None,
) -> ExperimentConfig:
    """Parse an experiment config file (YAML mapping, paths config-relative).

    Schema, with defaults:

        feature_files: {name: path, ...}        # required
        augmented_feature_files: {name: path}   # default {}
        metadata_csv: path                      # required when fused
        labels_csv: path                        # required
        metadata_fields: [name, ...]            # required when fused
        variants: {image_only: true, fused: true, augmented: false}
        split: {seed: 0, train_fraction: 0.7, stratify: false}
        train: {learning_rate: 0.1, max_epochs: 2000,
                gradient_tolerance: 1.0e-6, adaptive_rate: true,
                standardize: true, seed: 0}
        output_dir: path                        # overridable from the CLI
        workers: 1

    The keyword arguments override the corresponding file values.
    """
    p = Path(path)
    try:
        raw = yaml.safe_load(p.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {p}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"{p}: invalid YAML: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{p}: config must be a mapping, got {type(raw).__name__}")
    _check_keys(raw, _TOP_KEYS, "config")
    base = p.parent

    if "feature_files" not in raw:
        raise ConfigError(f"{p}: feature_files is required")
    if "labels_csv" not in raw:
        raise ConfigError(f"{p}: labels_csv is required")

    variants = raw.get("variants") or {}
    _check_keys(variants, _VARIANT_KEYS, "variants")
    split = raw.get("split") or {}
    _check_keys(split, _SPLIT_KEYS, "split")
    train_raw = dict(raw.get("train") or {})
    _check_keys(train_raw, _TRAIN_KEYS, "train")
    standardize = bool(train_raw.pop("standardize", True))
    if train_seed is not None:
        train_raw["seed"] = train_seed
    try:
        train = TrainConfig(**train_raw)
    except TypeError as exc:
        raise ConfigError(f"{p}: bad train section: {exc}") from exc

    out = output_dir if output_dir is not None else raw.get("output_dir")
    if out is None:
        raise ConfigError(f"{p}: output_dir missing (set it in the file or via --output)")

    fields = raw.get("metadata_fields") or ()
    if not isinstance(fields, (list, tuple)) or not all(
        isinstance(f, str) for f in fields
    ):
        raise ConfigError(f"{p}: metadata_fields must be a list of field names")

    metadata_csv = raw.get("metadata_csv")
    return ExperimentConfig(
        feature_files=_file_map(raw["feature_files"], base, "feature_files"),
        augmented_feature_files=_file_map(
            raw.get("augmented_feature_files") or {}, base, "augmented_feature_files"
        ),
        labels_csv=_as_path(raw["labels_csv"], base),
        metadata_csv=None if metadata_csv is None else _as_path(metadata_csv, base),
        metadata_fields=tuple(fields),
        image_only=bool(variants.get("image_only", True)),
        fused=bool(variants.get("fused", True)),
        include_augmented=bool(variants.get("augmented", False)),
        split_seed=int(split.get("seed", 0)) if split_seed is None else split_seed,
        train_fraction=float(split.get("train_fraction", 0.7)),
        stratify=bool(split.get("stratify", False)),
        train=train,
        standardize=standardize,
        output_dir=_as_path(out, base),
        workers=int(workers if workers is not None else raw.get("workers", 1)),
    )


@dataclass(frozen=True)
class RunRecord:
    """One trained cell of the grid plus its evaluation and timings."""

    extractor: str
    modality: str
    processing: str
    d_image: int
    d_metadata: int
    extraction_seconds: float | None
    train_seconds: float
    epochs: int
    final_grad_norm: float
    report: EvaluationReport

    def __post_init__(self):
        if self.modality not in MODALITIES:
            raise ConfigError(f"unknown modality {self.modality!r}")
        if self.processing not in PROCESSINGS:
            raise ConfigError(f"unknown processing {self.processing!r}")
        if self.train_seconds < 0 or (
            self.extraction_seconds is not None and self.extraction_seconds < 0
        ):
            raise DataError("timings must be non-negative")

    @property
    def variant(self) -> str:
        return f"{self.modality}/{self.processing}"


@dataclass(frozen=True)
class ExperimentResult:
    """All records of one experiment, with recomputable delta reports."""

    records: tuple[RunRecord, ...]
    deltas: dict[tuple[str, str], DeltaReport]
    class_names: tuple[str, ...]
    config_fingerprint: str
    config_yaml: str
    split_seed: int
    train_fraction: float
    train_seed: int
    split_fingerprint: str
    n_train: int
    n_test: int


def _compute_deltas(records) -> dict[tuple[str, str], DeltaReport]:
    by_key = {(r.extractor, r.modality, r.processing): r for r in records}
    deltas = {}
    for extractor in sorted({r.extractor for r in records}):
        for processing in PROCESSINGS:
            fused_rec = by_key.get((extractor, "fused", processing))
            image_rec = by_key.get((extractor, "image_only", processing))
            if fused_rec is not None and image_rec is not None:
                deltas[(extractor, processing)] = delta_report(
                    fused_rec.report, image_rec.report
                )
    return deltas


def _extraction_seconds(feature_path: Path) -> float | None:
    """Wall-clock seconds from a `<file>.manifest.json` written at export."""
    manifest = Path(str(feature_path) + ".manifest.json")
    if not manifest.exists():
        return None
    try:
        data = json.loads(manifest.read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise StructuralError(f"{manifest}: unreadable manifest: {exc}") from exc
    seconds = data.get("seconds")
    if seconds is None:
        return None
    if not isinstance(seconds, (int, float)) or seconds < 0:
        raise StructuralError(f"{manifest}: bad seconds value {seconds!r}")
    return float(seconds)


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    """Train and evaluate every requested grid cell on one shared split.

    The labels file fixes the canonical sample order; every feature
    matrix and the metadata table are realigned to it, so the seeded
    split indices select the same samples in every cell.
    """
    label_ids, label_names = load_labels_csv(cfg.labels_csv)
    if len(set(label_ids)) != len(label_ids):
        raise DataError(f"{cfg.labels_csv}: duplicate sample ids")
    master_ids = tuple(label_ids)
    y = labels_from_names(label_names)
    n = len(master_ids)

    encoded = None
    if cfg.fused:
        meta_ids, table = load_metadata_csv(cfg.metadata_csv)
        table = table.select(cfg.metadata_fields)
        order = align_to_ids(master_ids, meta_ids, f"metadata {cfg.metadata_csv}")
        table = MetadataTable(
            field_names=table.field_names,
            records=tuple(table.records[i] for i in order),
        )
        encoded = encode_table(table)

    split = fixed_split(
        n,
        seed=cfg.split_seed,
        fraction=cfg.train_fraction,
        labels=y.labels,
        stratify=cfg.stratify,
    )
    split_fp = split.fingerprint()

    matrices: dict[tuple[str, str], FeatureMatrix] = {}
    extraction: dict[tuple[str, str], float | None] = {}
    for processing in cfg.processings:
        files = (
            cfg.feature_files
            if processing == "unprocessed"
            else cfg.augmented_feature_files
        )
        for extractor in sorted(files):
            path = files[extractor]
            where = f"{extractor}/{processing}"
            try:
                fm = read_features(path)
                order = align_to_ids(master_ids, fm.sample_ids, f"{where} features")
            except FeatFuseError as exc:
                raise type(exc)(f"{where}: {exc}") from exc
            matrices[(extractor, processing)] = FeatureMatrix(
                data=fm.data[order],
                sample_ids=master_ids,
                extractor_name=fm.extractor_name,
            )
            extraction[(extractor, processing)] = _extraction_seconds(path)

    def run_cell(extractor: str, processing: str, modality: str) -> RunRecord:
        fm = matrices[(extractor, processing)]
        if modality == "fused":
            design = fuse(fm, encoded, metadata_sample_ids=master_ids).data
            d_meta = encoded.width
        else:
            design = fm.data
            d_meta = 0
        clf = SoftmaxClassifier(
            learning_rate=cfg.train.learning_rate,
            max_epochs=cfg.train.max_epochs,
            gradient_tolerance=cfg.train.gradient_tolerance,
            adaptive_rate=cfg.train.adaptive_rate,
            standardize=cfg.standardize,
            seed=cfg.train.seed,
        )
        clf.fit(design[split.train_indices], y.take(split.train_indices))
        proba = clf.predict_proba(design[split.test_indices])
        report = evaluate_predictions(
            y.labels[split.test_indices], proba, y.class_names, split_fp
        )
        return RunRecord(
            extractor=extractor,
            modality=modality,
            processing=processing,
            d_image=fm.n_features,
            d_metadata=d_meta,
            extraction_seconds=extraction[(extractor, processing)],
            train_seconds=clf.trace_.wall_seconds,
            epochs=clf.trace_.epochs,
            final_grad_norm=clf.trace_.final_grad_norm,
            report=report,
        )

    cells = [
        (extractor, processing, modality)
        for extractor in sorted(cfg.feature_files)
        for processing in cfg.processings
        for modality in cfg.modalities
    ]

    def guarded(cell):
        try:
            return run_cell(*cell)
        except FeatFuseError as exc:
            where = "/".join(cell)
            if isinstance(exc, ConfigError):
                raise ConfigError(f"{where}: {exc}") from exc
            if isinstance(exc, NumericError):
                raise NumericError(f"{where}: {exc}") from exc
            raise DataError(f"{where}: {exc}") from exc

    if cfg.workers == 1 or len(cells) == 1:
        records = [guarded(cell) for cell in cells]
    else:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            futures = [pool.submit(guarded, cell) for cell in cells]
        records = [f.result() for f in futures]

    assert all(r.report.split_fingerprint == split_fp for r in records)
    return ExperimentResult(
        records=tuple(records),
        deltas=_compute_deltas(records),
        class_names=y.class_names,
        config_fingerprint=cfg.fingerprint(),
        config_yaml=yaml.safe_dump(cfg.semantic_dict(), sort_keys=True),
        split_seed=cfg.split_seed,
        train_fraction=cfg.train_fraction,
        train_seed=cfg.train.seed,
        split_fingerprint=split_fp,
        n_train=int(split.train_indices.size),
        n_test=int(split.test_indices.size),
    )


# --- report emission --------------------------------------------------------

def _slug(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]+", "-", name)


def _fmt(value) -> str:
    """Stable cell text: ints bare, floats via repr, None empty."""
    if value is None:
        return ""
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    f = float(value)
    return str(int(f)) if f.is_integer() else repr(f)


def _provenance_lines(result: ExperimentResult) -> list[str]:
    return [
        f"# config={result.config_fingerprint}",
        f"# split={result.split_fingerprint}",
        f"# split_seed={result.split_seed}",
        f"# train_fraction={result.train_fraction!r}",
        f"# train_seed={result.train_seed}",
    ]


def _write_lines(path: Path, lines: list[str]) -> None:
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def report_csv_lines(report: EvaluationReport, headers=()) -> list[str]:
    """Metric table for one evaluation: per-class rows, then a macro row.

    ``headers`` are prepended verbatim (use ``# key=value`` lines).
    """
    lines = list(headers)
    lines.append("class,tp,fp,tn,fn," + ",".join(MEASURES) + ",auroc,degenerate")
    rows = list(zip(report.class_names, report.per_class, report.per_class_auroc))
    rows.append(("macro", report.macro, report.macro_auroc))
    for name, m, auroc in rows:
        cells = [name, _fmt(m.tp), _fmt(m.fp), _fmt(m.tn), _fmt(m.fn)]
        cells += [_fmt(getattr(m, meas)) for meas in MEASURES]
        cells.append(_fmt(auroc))
        cells.append("|".join(m.degenerate))
        lines.append(",".join(cells))
    return lines


def _record_table(result: ExperimentResult, rec: RunRecord) -> list[str]:
    headers = _provenance_lines(result) + [
        f"# extractor={rec.extractor}",
        f"# modality={rec.modality}",
        f"# processing={rec.processing}",
        f"# d_image={rec.d_image}",
        f"# d_metadata={rec.d_metadata}",
        f"# epochs={rec.epochs}",
        f"# final_grad_norm={rec.final_grad_norm!r}",
        f"# n_test={rec.report.n_test}",
    ]
    return report_csv_lines(rec.report, headers)


def _bars_table(result: ExperimentResult) -> list[str]:
    lines = _provenance_lines(result) + ["network,processing,metric,delta"]
    for (extractor, processing), delta in sorted(result.deltas.items()):
        for metric in (*MEASURES, "auroc"):
            lines.append(
                f"{extractor},{processing},{metric},{_fmt(delta.macro_deltas[metric])}"
            )
    return lines


def _boxplot_table(result: ExperimentResult) -> list[str]:
    lines = _provenance_lines(result) + ["network,processing,class,auroc_delta"]
    for (extractor, processing), delta in sorted(result.deltas.items()):
        for cls, value in zip(delta.class_names, delta.auroc_deltas):
            lines.append(f"{extractor},{processing},{cls},{_fmt(value)}")
    return lines


def _summary_table(result: ExperimentResult) -> list[str]:
    lines = _provenance_lines(result) + [
        "network,processing,minimum,lower_quartile,median,upper_quartile,maximum"
    ]
    for (extractor, processing), delta in sorted(result.deltas.items()):
        s = delta.auroc_summary
        lines.append(
            ",".join(
                [
                    extractor,
                    processing,
                    _fmt(s.minimum),
                    _fmt(s.lower_quartile),
                    _fmt(s.median),
                    _fmt(s.upper_quartile),
                    _fmt(s.maximum),
                ]
            )
        )
    return lines


def _runtime_table(result: ExperimentResult) -> list[str]:
    by_key = {(r.extractor, r.modality, r.processing): r for r in result.records}
    lines = _provenance_lines(result) + [
        "network,d_image,d_fused,"
        "extraction_unprocessed_s,extraction_augmented_s,"
        "train_image_only_unprocessed_s,train_image_only_augmented_s,"
        "train_fused_unprocessed_s,train_fused_augmented_s"
    ]
    for extractor in sorted({r.extractor for r in result.records}):
        recs = [r for r in result.records if r.extractor == extractor]
        d_image = recs[0].d_image
        fused_recs = [r for r in recs if r.modality == "fused"]
        d_fused = fused_recs[0].d_image + fused_recs[0].d_metadata if fused_recs else None

        def cell(modality, processing, attr):
            r = by_key.get((extractor, modality, processing))
            return _fmt(getattr(r, attr)) if r is not None else ""

        extraction = []
        for processing in PROCESSINGS:
            found = [r for r in recs if r.processing == processing]
            extraction.append(_fmt(found[0].extraction_seconds) if found else "")
        lines.append(
            ",".join(
                [
                    extractor,
                    _fmt(d_image),
                    _fmt(d_fused),
                    *extraction,
                    cell("image_only", "unprocessed", "train_seconds"),
                    cell("image_only", "augmented", "train_seconds"),
                    cell("fused", "unprocessed", "train_seconds"),
                    cell("fused", "augmented", "train_seconds"),
                ]
            )
        )
    return lines


def _metrics_to_dict(m: ClassMetrics) -> dict:
    d = {name: getattr(m, name) for name in ("tp", "fp", "tn", "fn", *MEASURES)}
    d["degenerate"] = list(m.degenerate)
    return d


def _metrics_from_dict(d: dict) -> ClassMetrics:
    return ClassMetrics(
        **{name: float(d[name]) for name in ("tp", "fp", "tn", "fn", *MEASURES)},
        degenerate=tuple(d.get("degenerate", ())),
    )


def _report_to_dict(r: EvaluationReport) -> dict:
    return {
        "class_names": list(r.class_names),
        "confusion": r.confusion.counts.tolist(),
        "per_class": [_metrics_to_dict(m) for m in r.per_class],
        "macro": _metrics_to_dict(r.macro),
        "per_class_auroc": list(r.per_class_auroc),
        "macro_auroc": r.macro_auroc,
        "n_test": r.n_test,
        "split_fingerprint": r.split_fingerprint,
    }


def _report_from_dict(d: dict) -> EvaluationReport:
    # ROC curve points are not serialized; AUROC values are.
    return EvaluationReport(
        class_names=tuple(d["class_names"]),
        confusion=ConfusionMatrix(np.asarray(d["confusion"], dtype=np.int64)),
        per_class=tuple(_metrics_from_dict(m) for m in d["per_class"]),
        macro=_metrics_from_dict(d["macro"]),
        roc_curves=(),
        per_class_auroc=tuple(float(v) for v in d["per_class_auroc"]),
        macro_auroc=float(d["macro_auroc"]),
        n_test=int(d["n_test"]),
        split_fingerprint=d["split_fingerprint"],
    )


def _record_to_dict(r: RunRecord) -> dict:
    return {
        "extractor": r.extractor,
        "modality": r.modality,
        "processing": r.processing,
        "d_image": r.d_image,
        "d_metadata": r.d_metadata,
        "extraction_seconds": r.extraction_seconds,
        "train_seconds": r.train_seconds,
        "epochs": r.epochs,
        "final_grad_norm": r.final_grad_norm,
        "report": _report_to_dict(r.report),
    }


def _record_from_dict(d: dict) -> RunRecord:
    return RunRecord(
        extractor=d["extractor"],
        modality=d["modality"],
        processing=d["processing"],
        d_image=int(d["d_image"]),
        d_metadata=int(d["d_metadata"]),
        extraction_seconds=(
            None if d["extraction_seconds"] is None else float(d["extraction_seconds"])
        ),
        train_seconds=float(d["train_seconds"]),
        epochs=int(d["epochs"]),
        final_grad_norm=float(d["final_grad_norm"]),
        report=_report_from_dict(d["report"]),
    )


def save_records(result: ExperimentResult, path) -> None:
    """Persist everything `report` needs to re-emit files without retraining."""
    data = {
        "format": _RECORDS_FORMAT,
        "config_fingerprint": result.config_fingerprint,
        "config_yaml": result.config_yaml,
        "class_names": list(result.class_names),
        "split": {
            "seed": result.split_seed,
            "train_fraction": result.train_fraction,
            "fingerprint": result.split_fingerprint,
            "n_train": result.n_train,
            "n_test": result.n_test,
        },
        "train_seed": result.train_seed,
        "records": [_record_to_dict(r) for r in result.records],
    }
    Path(path).write_text(
        json.dumps(data, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )


def load_records(path) -> ExperimentResult:
    """Rebuild an ExperimentResult (deltas recomputed, ROC curves dropped)."""
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise DataError(f"records file not found: {path}") from None
    except ValueError as exc:
        raise StructuralError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(data, dict) or data.get("format") != _RECORDS_FORMAT:
        raise StructuralError(f"{path}: not a records file (format 1 expected)")
    records = tuple(_record_from_dict(d) for d in data["records"])
    split = data["split"]
    return ExperimentResult(
        records=records,
        deltas=_compute_deltas(records),
        class_names=tuple(data["class_names"]),
        config_fingerprint=data["config_fingerprint"],
        config_yaml=data["config_yaml"],
        split_seed=int(split["seed"]),
        train_fraction=float(split["train_fraction"]),
        train_seed=int(data["train_seed"]),
        split_fingerprint=split["fingerprint"],
        n_train=int(split["n_train"]),
        n_test=int(split["n_test"]),
    )


def emit_reports(
    result: ExperimentResult, output_dir, execution: dict | None = None
) -> list[Path]:
    """Write all report files; returns the paths (manifest.json last).

    Deterministic files depend only on the experiment result;
    runtimes.csv, records.json, and manifest.json carry wall-clock data
    and are listed as such in the manifest.
    """
    if not result.records:
        raise DataError("no run records to report")
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)

    written: list[Path] = []

    def emit(name: str, lines: list[str]) -> None:
        path = out / name
        _write_lines(path, lines)
        written.append(path)

    emit("resolved_config.yaml", [result.config_yaml.rstrip("\n")])
    for rec in result.records:
        emit(
            f"report_{_slug(rec.extractor)}_{rec.modality}_{rec.processing}.csv",
            _record_table(result, rec),
        )
    if result.deltas:
        emit("deltas_bars.csv", _bars_table(result))
        emit("auroc_deltas_boxplot.csv", _boxplot_table(result))
        emit("auroc_delta_summary.csv", _summary_table(result))
    deterministic = [p.name for p in written]

    emit("runtimes.csv", _runtime_table(result))
    save_records(result, out / "records.json")
    written.append(out / "records.json")

    manifest = {
        "created_utc": datetime.now(timezone.utc).isoformat(),
        "config_fingerprint": result.config_fingerprint,
        "split_fingerprint": result.split_fingerprint,
        "deterministic_files": deterministic,
        "timing_files": list(TIMING_FILES),
        "record_count": len(result.records),
        "delta_count": len(result.deltas),
    }
    if execution:
        manifest["execution"] = execution
    manifest_path = out / "manifest.json"
    manifest_path.write_text(
        json.dumps(manifest, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    written.append(manifest_path)
    return written
