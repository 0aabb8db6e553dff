"""Fuse deep image features with ASCII-decimal metadata and classify.

The pipeline: precomputed feature vectors (one binary file per
extractor) are concatenated with fixed-width ASCII-decimal encodings of
text metadata, a linear softmax classifier is trained by full-batch
gradient descent on a fixed 70:30 split, and image-only vs. fused
models are compared with per-class and macro metrics, one-vs-rest ROC
analysis, and delta reports.
"""

from .augment import (
    AugmentationParams,
    augment,
    resize_bilinear,
    rng_for_sample,
    sample_params,
    stage_augmented_images,
)
from .classifier import (
    ColumnStandardizer,
    SoftmaxClassifier,
    TrainConfig,
    TrainTrace,
    load_model,
    loss_and_grad,
    save_model,
    softmax,
)
from .codec import (
    AsciiDecimalEncoder,
    EncodedMetadata,
    MetadataTable,
    decode_table,
    encode_table,
    encode_with_widths,
    field_widths,
    load_metadata_csv,
    save_metadata_csv,
)
from .errors import (
    AlignmentError,
    ChecksumError,
    ComparabilityError,
    ConfigError,
    DataError,
    DegenerateInputError,
    DegenerateSplitError,
    DivergenceError,
    EmptyInputError,
    EncodingError,
    FeatFuseError,
    MagicMismatchError,
    NonFiniteError,
    NumericError,
    ShapeMismatchError,
    StructuralError,
    TruncatedFileError,
    UndefinedRocError,
)
from .featureio import (
    FeatureMatrix,
    LabelVector,
    SplitSpec,
    align_to_ids,
    fixed_split,
    labels_from_names,
    load_features_csv,
    load_labels_csv,
    read_features,
    save_labels_csv,
    write_features,
)
from .fusion import FusedMatrix, fuse
from .metrics import (
    MEASURES,
    ClassMetrics,
    ConfusionMatrix,
    DeltaReport,
    EvaluationReport,
    FiveNumberSummary,
    RocCurve,
    class_metrics,
    confusion,
    delta_report,
    evaluate_predictions,
    five_number_summary,
    macro_average,
    roc_auroc,
)
from .runner import (
    ExperimentConfig,
    ExperimentResult,
    RunRecord,
    emit_reports,
    load_config,
    load_records,
    run_experiment,
)
from .synthetic import SyntheticDataset, make_directional_dataset, write_corpus

__version__ = "1.0.0"

__all__ = [
    "AlignmentError",
    "AsciiDecimalEncoder",
    "AugmentationParams",
    "ChecksumError",
    "ClassMetrics",
    "ComparabilityError",
    "ConfigError",
    "ConfusionMatrix",
    "DataError",
    "DegenerateInputError",
    "DegenerateSplitError",
    "DeltaReport",
    "DivergenceError",
    "EmptyInputError",
    "EncodedMetadata",
    "EncodingError",
    "EvaluationReport",
    "ExperimentConfig",
    "ExperimentResult",
    "FeatFuseError",
    "FeatureMatrix",
    "FiveNumberSummary",
    "FusedMatrix",
    "LabelVector",
    "MagicMismatchError",
    "MEASURES",
    "MetadataTable",
    "NonFiniteError",
    "NumericError",
    "RocCurve",
    "RunRecord",
    "ShapeMismatchError",
    "ColumnStandardizer",
    "SoftmaxClassifier",
    "SplitSpec",
    "StructuralError",
    "SyntheticDataset",
    "TrainConfig",
    "TrainTrace",
    "TruncatedFileError",
    "UndefinedRocError",
    "align_to_ids",
    "augment",
    "class_metrics",
    "confusion",
    "decode_table",
    "delta_report",
    "emit_reports",
    "encode_table",
    "encode_with_widths",
    "evaluate_predictions",
    "field_widths",
    "fixed_split",
    "five_number_summary",
    "fuse",
    "labels_from_names",
    "load_config",
    "load_features_csv",
    "load_labels_csv",
    "load_metadata_csv",
    "load_model",
    "load_records",
    "loss_and_grad",
    "macro_average",
    "make_directional_dataset",
    "read_features",
    "resize_bilinear",
    "rng_for_sample",
    "roc_auroc",
    "run_experiment",
    "sample_params",
    "save_labels_csv",
    "save_metadata_csv",
    "save_model",
    "softmax",
    "stage_augmented_images",
    "write_corpus",
    "write_features",
]
