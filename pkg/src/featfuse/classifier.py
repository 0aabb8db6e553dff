"""Linear softmax classifier trained by full-batch gradient descent.

The trainer minimises mean multinomial cross-entropy over per-column
standardized inputs, starting from zero weights (the objective is convex, so
the start only affects epoch count). It stops when the infinity norm of the
full parameter gradient falls below the tolerance or at the epoch cap.
All training arithmetic is 64-bit.
"""

from __future__ import annotations

import json
import os
import struct
import time
import zlib
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from .errors import (
    ChecksumError,
    ConfigError,
    DataError,
    DegenerateInputError,
    DivergenceError,
    MagicMismatchError,
    NonFiniteError,
    ShapeMismatchError,
    StructuralError,
    TruncatedFileError,
)
from .featureio import FORMAT_VERSION, LabelVector, _Reader, _u32, _u64

MODEL_MAGIC = b"FFUSMDL1"
MIN_LEARNING_RATE = 1e-15


def softmax(z: np.ndarray) -> np.ndarray:
    """Probabilities e^{z_i} / sum_j e^{z_j}, computed with max subtraction."""
    z = np.asarray(z, dtype=np.float64)
    if not np.isfinite(z).all():
        raise NonFiniteError("softmax input must be finite")
    shifted = z - z.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def _log_softmax(z: np.ndarray) -> np.ndarray:
    shifted = z - z.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def loss_and_grad(x, y, weights, bias):
    """Mean cross-entropy and its gradient for logits x @ weights + bias.

    y holds integer class indices. Returns (loss, grad_weights, grad_bias).
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y)
    n = x.shape[0]
    z = x @ weights + bias
    logp = _log_softmax(z)
    loss = -float(logp[np.arange(n), y].mean())
    p = np.exp(logp)
    resid = p
    resid[np.arange(n), y] -= 1.0
    grad_w = x.T @ resid / n
    grad_b = resid.mean(axis=0)
    return loss, grad_w, grad_b


@dataclass
class TrainConfig:
    """Training knobs: epoch cap, gradient stopping tolerance, step size."""

    max_epochs: int = 2000
    gradient_tolerance: float = 1e-6
    learning_rate: float = 0.1
    adaptive_rate: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.max_epochs < 1:
            raise ConfigError(f"max_epochs must be >= 1, got {self.max_epochs}")
        if not self.gradient_tolerance > 0:
            raise ConfigError("gradient_tolerance must be positive")
        if not self.learning_rate > 0:
            raise ConfigError("learning_rate must be positive")
        if self.seed < 0:
            raise ConfigError(f"seed must be non-negative, got {self.seed}")


@dataclass
class TrainTrace:
    """Per-epoch loss history and stopping diagnostics."""

    losses: list[float] = field(default_factory=list)
    epochs: int = 0
    final_grad_norm: float = float("inf")
    final_learning_rate: float = 0.0
    wall_seconds: float = 0.0
    converged: bool = False
    stop_reason: str = ""
    grad_norm_kind: str = "inf"  # stopping norm; L2 alternates can be compared offline
    empty_classes: tuple[int, ...] = ()
    threads: int = 1


class ColumnStandardizer:
    """Per-column affine standardization fit on training data.

    Constant columns get scale 1 so they pass through centred but unscaled.
    """

    def fit(self, x: np.ndarray) -> "ColumnStandardizer":
        x = np.asarray(x, dtype=np.float64)
        self.mean_ = x.mean(axis=0) if x.shape[0] else np.zeros(x.shape[1])
        scale = x.std(axis=0)
        scale[scale == 0.0] = 1.0
        self.scale_ = scale
        return self

    def transform(self, x: np.ndarray) -> np.ndarray:
        return (np.asarray(x, dtype=np.float64) - self.mean_) / self.scale_


class SoftmaxClassifier(BaseEstimator, ClassifierMixin):
    """K-class linear softmax model trained by full-batch gradient descent.

    Parameters mirror TrainConfig; adaptive_rate halves the step whenever a
    trial step would increase the loss (set False for a strict constant-rate
    run). intercept_only disables the feature block and fits class priors
    through the bias alone.
    """

    def __init__(
        self,
        learning_rate: float = 0.1,
        max_epochs: int = 2000,
        gradient_tolerance: float = 1e-6,
        adaptive_rate: bool = True,
        standardize: bool = True,
        intercept_only: bool = False,
        seed: int = 0,
    ):
        self.learning_rate = learning_rate
        self.max_epochs = max_epochs
        self.gradient_tolerance = gradient_tolerance
        self.adaptive_rate = adaptive_rate
        self.standardize = standardize
        self.intercept_only = intercept_only
        self.seed = seed

    # -- fitting -------------------------------------------------------------

    def _resolve_labels(self, y) -> LabelVector:
        if isinstance(y, LabelVector):
            return y
        y = np.asarray(y)
        if y.dtype.kind in "UOS":
            from .featureio import labels_from_names

            return labels_from_names([str(v) for v in y])
        y = y.astype(np.int64)
        if y.size == 0 or y.min() < 0:
            raise DataError("integer labels must be non-negative and non-empty")
        k = int(y.max()) + 1
        if k < 2:
            k = 2
        return LabelVector(labels=y, class_names=tuple(str(i) for i in range(k)))

    def fit(self, X, y):
        TrainConfig(
            max_epochs=self.max_epochs,
            gradient_tolerance=self.gradient_tolerance,
            learning_rate=self.learning_rate,
            adaptive_rate=self.adaptive_rate,
            seed=self.seed,
        )
        labels = self._resolve_labels(y)
        x = np.asarray(X, dtype=np.float64)
        if x.ndim != 2:
            raise ShapeMismatchError(f"design matrix must be 2-D, got shape {x.shape}")
        if self.intercept_only:
            x = x[:, :0]
        elif x.shape[1] == 0:
            raise DegenerateInputError(
                "design matrix has no columns; use intercept_only to fit priors"
            )
        if not np.isfinite(x).all():
            raise NonFiniteError("design matrix contains NaN or Inf")
        n, d = x.shape
        k = labels.n_classes
        if labels.labels.shape[0] != n:
            raise ShapeMismatchError(f"{n} rows but {labels.labels.shape[0]} labels")
        if n < k:
            raise DataError(f"need at least K={k} samples, got {n}")

        counts = np.bincount(labels.labels, minlength=k)
        trace = TrainTrace(
            empty_classes=tuple(int(c) for c in np.flatnonzero(counts == 0)),
            threads=os.cpu_count() or 1,
        )

        scaler = ColumnStandardizer().fit(x)
        xs = scaler.transform(x) if self.standardize else x
        if not self.standardize:
            scaler.mean_ = np.zeros(d)
            scaler.scale_ = np.ones(d)

        w = np.zeros((d, k))
        b = np.zeros(k)
        y_idx = labels.labels
        rows = np.arange(n)
        lr = float(self.learning_rate)

        def forward(wm, bv):
            # Overflow here is an anticipated outcome (oversized step), handled
            # by backtracking or DivergenceError, so silence the warnings.
            with np.errstate(over="ignore", invalid="ignore"):
                logp = _log_softmax(xs @ wm + bv)
                loss = -float(logp[rows, y_idx].mean())
                return loss, np.exp(logp)

        def gradient(p_mat):
            resid = p_mat.copy()
            resid[rows, y_idx] -= 1.0
            grad_w = xs.T @ resid / n
            grad_b = resid.mean(axis=0)
            norm = max(
                float(np.abs(grad_w).max()) if grad_w.size else 0.0,
                float(np.abs(grad_b).max()),
            )
            return grad_w, grad_b, norm

        start = time.perf_counter()
        loss, p = forward(w, b)
        if not np.isfinite(loss):
            raise DivergenceError(0)
        trace.losses.append(loss)

        for epoch in range(1, self.max_epochs + 1):
            grad_w, grad_b, gnorm = gradient(p)
            if gnorm < self.gradient_tolerance:
                trace.converged = True
                trace.stop_reason = "gradient below tolerance"
                break

            w_try = w - lr * grad_w
            b_try = b - lr * grad_b
            loss_try, p_try = forward(w_try, b_try)
            if self.adaptive_rate:
                while not loss_try <= loss and lr > MIN_LEARNING_RATE:
                    lr *= 0.5
                    w_try = w - lr * grad_w
                    b_try = b - lr * grad_b
                    loss_try, p_try = forward(w_try, b_try)
                if not loss_try <= loss:
                    trace.stop_reason = "learning rate underflow"
                    break
            elif not np.isfinite(loss_try):
                raise DivergenceError(epoch)

            w, b, loss, p = w_try, b_try, loss_try, p_try
            trace.losses.append(loss)
            trace.epochs = epoch
        else:
            trace.stop_reason = "epoch cap reached"

        # p always matches the committed (w, b), so this is the exit-point gradient.
        trace.final_grad_norm = gradient(p)[2]
        trace.final_learning_rate = lr
        trace.wall_seconds = time.perf_counter() - start

        self.weights_ = w
        self.intercept_ = b
        self.mean_ = scaler.mean_
        self.scale_ = scaler.scale_
        self.class_names_ = labels.class_names
        self.classes_ = np.arange(k)
        self.n_features_in_ = d
        self.trace_ = trace
        return self

    # -- prediction ----------------------------------------------------------

    def _design(self, X) -> np.ndarray:
        x = np.asarray(X, dtype=np.float64)
        if self.intercept_only:
            x = x[:, :0] if x.ndim == 2 else x.reshape(len(x), 0)
        if x.ndim != 2 or x.shape[1] != self.n_features_in_:
            raise ShapeMismatchError(
                f"model expects {self.n_features_in_} columns, got "
                f"{x.shape[1] if x.ndim == 2 else 'non-matrix input'}"
            )
        return (x - self.mean_) / self.scale_

    def predict_proba(self, X) -> np.ndarray:
        xs = self._design(X)
        return softmax(xs @ self.weights_ + self.intercept_)

    def predict(self, X) -> np.ndarray:
        # np.argmax keeps the lowest index on ties.
        return np.argmax(self.predict_proba(X), axis=1)


# --- model container --------------------------------------------------------

def save_model(clf: SoftmaxClassifier, path, extras: dict | None = None) -> None:
    """Write a fitted model in the same binary container family as features.

    ``extras`` rides along in the JSON echo (e.g. the metadata encoder
    layout a fused model was trained against) and comes back as the
    ``container_extras_`` attribute on load.
    """
    d, k = clf.weights_.shape
    echo = json.dumps(
        {
            "params": clf.get_params(),
            "class_names": list(clf.class_names_),
            "epochs": clf.trace_.epochs,
            "final_grad_norm": clf.trace_.final_grad_norm,
            "extras": extras or {},
        },
        sort_keys=True,
    ).encode("utf-8")
    payload = np.concatenate(
        [
            clf.weights_.reshape(-1),
            clf.intercept_,
            clf.mean_,
            clf.scale_,
        ]
    ).astype("<f8").tobytes()
    parts = [MODEL_MAGIC, _u64(FORMAT_VERSION), _u64(d), _u64(k)]
    parts.append(_u64(len(echo)))
    parts.append(echo)
    parts.append(payload)
    parts.append(_u32(zlib.crc32(payload) & 0xFFFFFFFF))
    with open(path, "wb") as fh:
        fh.write(b"".join(parts))


def load_model(path) -> SoftmaxClassifier:
    try:
        with open(path, "rb") as fh:
            r = _Reader(fh.read(), path)
    except OSError as exc:
        raise DataError(f"model file not readable: {path} ({exc})") from exc
    magic = r.take(8)
    if magic != MODEL_MAGIC:
        raise MagicMismatchError(f"{path}: bad magic {magic!r}, expected {MODEL_MAGIC!r}")
    version = r.u64()
    if version != FORMAT_VERSION:
        raise StructuralError(f"{path}: unsupported model version {version}")
    d, k = r.u64(), r.u64()
    echo = json.loads(r.take(r.u64()).decode("utf-8"))
    payload = r.take((d * k + k + d + d) * 8)
    crc = r.u32()
    r.expect_end()
    if crc != (zlib.crc32(payload) & 0xFFFFFFFF):
        raise ChecksumError(f"{path}: payload CRC-32 mismatch")
    flat = np.frombuffer(payload, dtype="<f8")
    clf = SoftmaxClassifier(**echo["params"])
    clf.weights_ = flat[: d * k].reshape(d, k).copy()
    pos = d * k
    clf.intercept_ = flat[pos : pos + k].copy()
    pos += k
    clf.mean_ = flat[pos : pos + d].copy()
    pos += d
    clf.scale_ = flat[pos : pos + d].copy()
    clf.class_names_ = tuple(echo["class_names"])
    clf.classes_ = np.arange(k)
    clf.n_features_in_ = d
    clf.trace_ = TrainTrace(
        epochs=int(echo["epochs"]),
        final_grad_norm=float(echo["final_grad_norm"]),
    )
    clf.container_extras_ = echo.get("extras", {})
    return clf
