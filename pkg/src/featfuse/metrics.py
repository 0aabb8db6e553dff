"""Confusion-matrix metrics, one-vs-rest ROC analysis, and model deltas.

Nine measures are computed per class after a one-vs-rest reduction:
accuracy, sensitivity, specificity, precision, npv, f_measure,
informedness, markedness, and mcc.  These definitions are the
authoritative in-repo reference:

    sensitivity  = TP / (TP + FN)
    specificity  = TN / (TN + FP)
    precision    = TP / (TP + FP)
    npv          = TN / (TN + FN)
    accuracy     = (TP + TN) / N
    f_measure    = 2 * precision * sensitivity / (precision + sensitivity)
    informedness = sensitivity + specificity - 1
    markedness   = precision + npv - 1
    mcc          = (TP*TN - FP*FN) / sqrt((TP+FP)(TP+FN)(TN+FP)(TN+FN))

Any 0/0 ratio is defined as 0 and the affected measure is named in the
``degenerate`` field, so macro averages stay defined when a class is
absent from the test split.  Production arithmetic is 64-bit float; the
test suite re-derives every measure with exact rationals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ComparabilityError,
    DataError,
    NonFiniteError,
    ShapeMismatchError,
    UndefinedRocError,
)

# Canonical measure order, used by reports and macro aggregation.
MEASURES = (
    "accuracy",
    "sensitivity",
    "specificity",
    "precision",
    "npv",
    "f_measure",
    "informedness",
    "markedness",
    "mcc",
)


@dataclass(frozen=True)
class ConfusionMatrix:
    """K x K count matrix; rows are true classes, columns predictions."""

    counts: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.counts, dtype=np.int64)
        if c.ndim != 2 or c.shape[0] != c.shape[1]:
            raise ShapeMismatchError(
                f"confusion matrix must be square, got shape {c.shape}"
            )
        if c.shape[0] < 1:
            raise DataError("confusion matrix needs at least one class")
        if (c < 0).any():
            raise DataError("confusion matrix entries must be non-negative")
        object.__setattr__(self, "counts", c)

    @property
    def k(self) -> int:
        return self.counts.shape[0]

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def one_vs_rest(self, class_index: int) -> tuple[int, int, int, int]:
        """Reduce to binary counts (tp, fp, tn, fn) for one class."""
        if not 0 <= class_index < self.k:
            raise DataError(
                f"class index {class_index} out of range for k={self.k}"
            )
        tp = int(self.counts[class_index, class_index])
        fn = int(self.counts[class_index].sum()) - tp
        fp = int(self.counts[:, class_index].sum()) - tp
        tn = self.total - tp - fn - fp
        return tp, fp, tn, fn

    def __repr__(self):
        return f"ConfusionMatrix(k={self.k}, total={self.total})"


def confusion(y_true, y_pred, k: int) -> ConfusionMatrix:
    """Count (true, predicted) pairs into a K x K matrix."""
    t = np.asarray(y_true, dtype=np.int64).ravel()
    p = np.asarray(y_pred, dtype=np.int64).ravel()
    if t.shape != p.shape:
        raise ShapeMismatchError(
            f"y_true has {t.size} entries but y_pred has {p.size}"
        )
    if k < 1:
        raise DataError(f"k must be positive, got {k}")
    for name, arr in (("y_true", t), ("y_pred", p)):
        if arr.size and (arr.min() < 0 or arr.max() >= k):
            raise DataError(f"{name} contains labels outside [0, {k})")
    counts = np.zeros((k, k), dtype=np.int64)
    np.add.at(counts, (t, p), 1)
    return ConfusionMatrix(counts)


@dataclass(frozen=True)
class ClassMetrics:
    """Binary counts plus the nine derived measures for one class.

    ``degenerate`` names every measure whose defining ratio was 0/0 and
    was therefore set to 0.  Counts are whole numbers for a single class
    and arithmetic means in the macro aggregate.
    """

    tp: float
    fp: float
    tn: float
    fn: float
    accuracy: float
    sensitivity: float
    specificity: float
    precision: float
    npv: float
    f_measure: float
    informedness: float
    markedness: float
    mcc: float
    degenerate: tuple[str, ...] = field(default=())

    def as_dict(self) -> dict[str, float]:
        return {name: getattr(self, name) for name in MEASURES}


def _ratio(num: float, den: float, name: str, flags: list[str]) -> float:
    if den == 0:
        flags.append(name)
        return 0.0
    return num / den


def class_metrics(cm: ConfusionMatrix, class_index: int) -> ClassMetrics:
    """One-vs-rest measures for a single class of a confusion matrix."""
    tp, fp, tn, fn = cm.one_vs_rest(class_index)
    n = tp + fp + tn + fn
    flags: list[str] = []

    sensitivity = _ratio(tp, tp + fn, "sensitivity", flags)
    specificity = _ratio(tn, tn + fp, "specificity", flags)
    precision = _ratio(tp, tp + fp, "precision", flags)
    npv = _ratio(tn, tn + fn, "npv", flags)
    accuracy = _ratio(tp + tn, n, "accuracy", flags)
    f_measure = _ratio(
        2.0 * precision * sensitivity, precision + sensitivity, "f_measure", flags
    )
    # The identities below hold exactly because they reuse the
    # already-substituted ratios.
    informedness = sensitivity + specificity - 1.0
    markedness = precision + npv - 1.0

    mcc_den = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn)
    if mcc_den == 0:
        flags.append("mcc")
        mcc = 0.0
    else:
        mcc = (tp * tn - fp * fn) / math.sqrt(mcc_den)

    return ClassMetrics(
        tp=float(tp),
        fp=float(fp),
        tn=float(tn),
        fn=float(fn),
        accuracy=accuracy,
        sensitivity=sensitivity,
        specificity=specificity,
        precision=precision,
        npv=npv,
        f_measure=f_measure,
        informedness=informedness,
        markedness=markedness,
        mcc=mcc,
        degenerate=tuple(flags),
    )


def macro_average(per_class: list[ClassMetrics]) -> ClassMetrics:
    """Unweighted mean of each measure over classes.

    Informedness and markedness are recomputed from the macro means of
    their constituent rates, so the defining identities hold exactly for
    the aggregate as well.  ``degenerate`` is the union of the per-class
    flags.
    """
    if not per_class:
        raise DataError("macro average of an empty metric list")
    k = len(per_class)

    def mean(name: str) -> float:
        return sum(getattr(m, name) for m in per_class) / k

    sensitivity = mean("sensitivity")
    specificity = mean("specificity")
    precision = mean("precision")
    npv = mean("npv")
    flagged = {name for m in per_class for name in m.degenerate}
    return ClassMetrics(
        tp=mean("tp"),
        fp=mean("fp"),
        tn=mean("tn"),
        fn=mean("fn"),
        accuracy=mean("accuracy"),
        sensitivity=sensitivity,
        specificity=specificity,
        precision=precision,
        npv=npv,
        f_measure=mean("f_measure"),
        informedness=sensitivity + specificity - 1.0,
        markedness=precision + npv - 1.0,
        mcc=mean("mcc"),
        degenerate=tuple(name for name in MEASURES if name in flagged),
    )


@dataclass(frozen=True)
class RocCurve:
    """ROC sweep from (0,0) to (1,1) over descending score thresholds."""

    fpr: np.ndarray
    tpr: np.ndarray
    thresholds: np.ndarray
    auroc: float

    def __post_init__(self):
        fpr = np.asarray(self.fpr, dtype=np.float64)
        tpr = np.asarray(self.tpr, dtype=np.float64)
        thr = np.asarray(self.thresholds, dtype=np.float64)
        if not (fpr.shape == tpr.shape == thr.shape) or fpr.ndim != 1:
            raise ShapeMismatchError("fpr, tpr, thresholds must share one shape")
        if fpr.size < 2:
            raise DataError("a ROC curve needs at least two points")
        if fpr[0] != 0.0 or tpr[0] != 0.0 or fpr[-1] != 1.0 or tpr[-1] != 1.0:
            raise DataError("ROC curve must run from (0,0) to (1,1)")
        if (np.diff(fpr) < 0).any() or (np.diff(tpr) < 0).any():
            raise DataError("ROC coordinates must be non-decreasing")
        object.__setattr__(self, "fpr", fpr)
        object.__setattr__(self, "tpr", tpr)
        object.__setattr__(self, "thresholds", thr)

    @property
    def points(self) -> np.ndarray:
        """(n_points, 2) array of (fpr, tpr) pairs."""
        return np.column_stack([self.fpr, self.tpr])


def roc_auroc(scores, positives) -> RocCurve:
    """ROC curve and trapezoidal AUROC for one-vs-rest scores.

    Tied scores move between confusion cells together (one curve point
    per distinct score), which makes the trapezoidal area equal to the
    Mann-Whitney statistic P(s+ > s-) + 0.5 * P(s+ = s-).
    """
    s = np.asarray(scores, dtype=np.float64).ravel()
    p = np.asarray(positives, dtype=bool).ravel()
    if s.shape != p.shape:
        raise ShapeMismatchError(
            f"{s.size} scores but {p.size} positive flags"
        )
    if not np.isfinite(s).all():
        raise NonFiniteError("scores contain NaN or infinity")
    n_pos = int(p.sum())
    n_neg = p.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise UndefinedRocError(
            f"ROC needs both classes, got {n_pos} positives / {n_neg} negatives"
        )

    order = np.argsort(-s, kind="stable")
    ss = s[order]
    pp = p[order]
    # Last index of each tie group of equal scores.
    group_end = np.r_[np.nonzero(np.diff(ss))[0], ss.size - 1]
    tp = np.cumsum(pp)[group_end]
    fp = np.cumsum(~pp)[group_end]
    fpr = np.r_[0.0, fp / n_neg]
    tpr = np.r_[0.0, tp / n_pos]
    thresholds = np.r_[np.inf, ss[group_end]]
    auroc = float(np.trapezoid(tpr, fpr))
    return RocCurve(fpr=fpr, tpr=tpr, thresholds=thresholds, auroc=auroc)


@dataclass(frozen=True)
class EvaluationReport:
    """Per-class and macro measures plus ROC analysis for one model."""

    class_names: tuple[str, ...]
    confusion: ConfusionMatrix
    per_class: tuple[ClassMetrics, ...]
    macro: ClassMetrics
    roc_curves: tuple[RocCurve, ...]
    per_class_auroc: tuple[float, ...]
    macro_auroc: float
    n_test: int
    split_fingerprint: str = ""

    def __post_init__(self):
        k = len(self.class_names)
        if self.confusion.k != k:
            raise ShapeMismatchError(
                f"{k} class names but confusion matrix has k={self.confusion.k}"
            )
        for what, seq in (
            ("per_class", self.per_class),
            ("per_class_auroc", self.per_class_auroc),
        ):
            if len(seq) != k:
                raise ShapeMismatchError(f"{what} has {len(seq)} entries for k={k}")
        # Curves may be dropped entirely when a report is rebuilt from a
        # serialized record; the AUROC values always stay.
        if self.roc_curves and len(self.roc_curves) != k:
            raise ShapeMismatchError(
                f"roc_curves has {len(self.roc_curves)} entries for k={k}"
            )


def evaluate_predictions(
    y_true,
    proba,
    class_names,
    split_fingerprint: str = "",
) -> EvaluationReport:
    """Score predicted class probabilities against integer labels.

    Predicted labels are the per-row argmax of ``proba``; the one-vs-rest
    ROC score for class c is column c of ``proba``.  Every class must
    have at least one positive and one negative in ``y_true`` or the ROC
    is undefined.
    """
    names = tuple(str(c) for c in class_names)
    k = len(names)
    t = np.asarray(y_true, dtype=np.int64).ravel()
    pr = np.asarray(proba, dtype=np.float64)
    if pr.ndim != 2 or pr.shape[1] != k:
        raise ShapeMismatchError(
            f"proba must be (n, {k}), got {pr.shape}"
        )
    if pr.shape[0] != t.size:
        raise ShapeMismatchError(
            f"{t.size} labels but {pr.shape[0]} probability rows"
        )
    if t.size and (t.min() < 0 or t.max() >= k):
        raise DataError(f"labels outside [0, {k})")

    y_pred = np.argmax(pr, axis=1)
    cm = confusion(t, y_pred, k)
    per_class = tuple(class_metrics(cm, c) for c in range(k))
    curves = []
    for c in range(k):
        try:
            curves.append(roc_auroc(pr[:, c], t == c))
        except UndefinedRocError as exc:
            raise UndefinedRocError(
                f"class {names[c]!r}: {exc}"
            ) from exc
    aurocs = tuple(curve.auroc for curve in curves)
    return EvaluationReport(
        class_names=names,
        confusion=cm,
        per_class=per_class,
        macro=macro_average(list(per_class)),
        roc_curves=tuple(curves),
        per_class_auroc=aurocs,
        macro_auroc=sum(aurocs) / k,
        n_test=int(t.size),
        split_fingerprint=split_fingerprint,
    )


@dataclass(frozen=True)
class FiveNumberSummary:
    """Boxplot summary: min, quartiles (linear interpolation), median, max."""

    minimum: float
    lower_quartile: float
    median: float
    upper_quartile: float
    maximum: float


def five_number_summary(values) -> FiveNumberSummary:
    v = np.asarray(values, dtype=np.float64).ravel()
    if v.size == 0:
        raise DataError("five-number summary of an empty sequence")
    lo, q1, med, q3, hi = np.quantile(v, [0.0, 0.25, 0.5, 0.75, 1.0])
    return FiveNumberSummary(
        minimum=float(lo),
        lower_quartile=float(q1),
        median=float(med),
        upper_quartile=float(q3),
        maximum=float(hi),
    )


@dataclass(frozen=True)
class DeltaReport:
    """Fused-minus-image deltas between two comparable evaluations.

    ``macro_deltas`` covers the nine measures plus ``auroc`` (bar-chart
    data); ``auroc_deltas`` holds the K per-class AUROC differences whose
    distribution ``auroc_summary`` describes (boxplot data).
    """

    class_names: tuple[str, ...]
    macro_deltas: dict[str, float]
    auroc_deltas: tuple[float, ...]
    auroc_summary: FiveNumberSummary
    n_test: int
    split_fingerprint: str


def delta_report(fused: EvaluationReport, image_only: EvaluationReport) -> DeltaReport:
    """Compare a fused-features evaluation against an image-only one.

    Both reports must describe the same class set and the same test
    split; differences are always fused minus image_only.
    """
    if fused.class_names != image_only.class_names:
        raise ComparabilityError(
            "reports cover different class sets: "
            f"{fused.class_names} vs {image_only.class_names}"
        )
    if fused.split_fingerprint != image_only.split_fingerprint:
        raise ComparabilityError(
            "reports come from different test splits: "
            f"{fused.split_fingerprint!r} vs {image_only.split_fingerprint!r}"
        )
    if fused.n_test != image_only.n_test:
        raise ComparabilityError(
            f"reports score different test sizes: {fused.n_test} vs {image_only.n_test}"
        )
    macro_deltas = {
        name: getattr(fused.macro, name) - getattr(image_only.macro, name)
        for name in MEASURES
    }
    macro_deltas["auroc"] = fused.macro_auroc - image_only.macro_auroc
    auroc_deltas = tuple(
        f - i for f, i in zip(fused.per_class_auroc, image_only.per_class_auroc)
    )
    return DeltaReport(
        class_names=fused.class_names,
        macro_deltas=macro_deltas,
        auroc_deltas=auroc_deltas,
        auroc_summary=five_number_summary(auroc_deltas),
        n_test=fused.n_test,
        split_fingerprint=fused.split_fingerprint,
    )
