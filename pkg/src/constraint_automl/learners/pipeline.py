"""Fitting, predicting and measuring complete ML pipelines.

A pipeline is imputation -> categorical encoding -> scaling -> classifier.
Random oversampling and class weighting only shape the training data and
leave nothing behind in the fitted pipeline.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..clock import Clock, default_clock
from ..data import Dataset
from ..errors import DataFormatError
from ..search_space import PipelineCandidate
from .classifiers import Classifier, make_classifier
from .metrics import balanced_accuracy, equal_opportunity

HEADER_BYTES = 64
WORD_BYTES = 8


class Imputer:
    """Stores fill values only for columns that had missing training cells."""

    def __init__(self, strategy="mean"):
        self.strategy = strategy

    def fit(self, X, nominal):
        self.fill_ = {}
        for j in np.flatnonzero(np.isnan(X).any(axis=0)):
            col = X[:, j][~np.isnan(X[:, j])]
            if len(col) == 0:
                self.fill_[int(j)] = 0.0
            elif nominal[j]:
                vals, counts = np.unique(col, return_counts=True)
                self.fill_[int(j)] = float(vals[np.argmax(counts)])
            elif self.strategy == "median":
                self.fill_[int(j)] = float(np.median(col))
            else:
                self.fill_[int(j)] = float(np.mean(col))
        return self

    def transform(self, X):
        if not np.isnan(X).any():
            return X
        X = X.copy()
        for j in np.flatnonzero(np.isnan(X).any(axis=0)):
            X[np.isnan(X[:, j]), j] = self.fill_.get(int(j), 0.0)
        return X

    def param_count(self) -> int:
        return len(self.fill_)


class Encoder:
    """Encodes nominal category codes; numeric columns pass through."""

    def __init__(self, strategy="onehot"):
        self.strategy = strategy

    def fit(self, X, nominal):
        self.nominal_ = tuple(nominal)
        self.levels_ = {}
        self.freq_ = {}
        for j, nom in enumerate(nominal):
            if nom:
                vals, counts = np.unique(X[:, j], return_counts=True)
                keep = vals >= 0
                self.levels_[j] = vals[keep]
                self.freq_[j] = counts[keep] / max(1, len(X))
        return self

    def transform(self, X):
        if not self.levels_:
            return X
        cols = []
        for j, nom in enumerate(self.nominal_):
            x = X[:, j]
            if not nom:
                cols.append(x[:, None])
                continue
            levels = self.levels_[j]
            pos = np.searchsorted(levels, x)
            pos_c = np.minimum(pos, max(len(levels) - 1, 0))
            known = (len(levels) > 0) & (levels[pos_c] == x) if len(levels) else np.zeros(len(x), bool)
            if self.strategy == "onehot":
                block = np.zeros((len(x), len(levels)))
                rows = np.flatnonzero(known)
                block[rows, pos_c[known]] = 1.0
                cols.append(block)
            elif self.strategy == "frequency":
                f = np.where(known, self.freq_[j][pos_c] if len(levels) else 0.0, 0.0)
                cols.append(f[:, None])
            else:
                cols.append(np.where(known, pos_c, -1).astype(float)[:, None])
        return np.hstack(cols) if cols else X

    def param_count(self) -> int:
        n_levels = sum(len(v) for v in self.levels_.values())
        return 2 * n_levels if self.strategy == "frequency" else n_levels


class Scaler:
    def __init__(self, strategy="standard"):
        self.strategy = strategy

    def fit(self, X):
        if self.strategy == "standard":
            self.shift_ = X.mean(axis=0)
            scale = X.std(axis=0)
        elif self.strategy == "minmax":
            self.shift_ = X.min(axis=0)
            scale = X.max(axis=0) - self.shift_
        else:
            self.shift_ = scale = None
            return self
        self.scale_ = np.where(scale > 1e-12, scale, 1.0)
        return self

    def transform(self, X):
        if self.shift_ is None:
            return X
        return (X - self.shift_) / self.scale_

    def param_count(self) -> int:
        return 0 if self.shift_ is None else 2 * len(self.shift_)


@dataclass(frozen=True, eq=False)
class TrainedPipeline:
    candidate: PipelineCandidate
    imputer: Imputer
    encoder: Encoder
    scaler: Scaler
    classifier: Classifier
    n_features: int
    n_classes: int
    n_train: int
    training_time: float
    size_bytes: int = 0

    @property
    def components(self) -> tuple:
        return (self.imputer, self.encoder, self.scaler, self.classifier)

    @property
    def depth(self) -> int | None:
        """Tree depth for tree-based classifiers, else ``None``."""
        return getattr(self.classifier, "depth", None)

    def transform(self, X) -> np.ndarray:
        return self.scaler.transform(self.encoder.transform(self.imputer.transform(X)))


@dataclass(frozen=True)
class PipelineMetrics:
    balanced_accuracy: float
    training_time: float
    inference_time_per_instance: float
    size_bytes: int
    equal_opportunity: float = 1.0

    def __post_init__(self):
        for name in ("balanced_accuracy", "equal_opportunity"):
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0):
                raise ValueError(f"{name}={v} outside [0, 1]")
        for name in ("training_time", "inference_time_per_instance"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise ValueError(f"{name}={v} must be finite and >= 0")
        if self.size_bytes <= 0:
            raise ValueError("size_bytes must be positive")

    def to_dict(self) -> dict:
        return {
            "balanced_accuracy": self.balanced_accuracy,
            "training_time_s": self.training_time,
            "inference_time_s": self.inference_time_per_instance,
            "pipeline_size_bytes": self.size_bytes,
            "equal_opportunity": self.equal_opportunity,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PipelineMetrics":
        return cls(d["balanced_accuracy"], d["training_time_s"], d["inference_time_s"],
                   int(d["pipeline_size_bytes"]), d.get("equal_opportunity", 1.0))


def class_weights(y, n_classes) -> np.ndarray:
    counts = np.bincount(y, minlength=n_classes).astype(float)
    present = counts > 0
    w = np.zeros(n_classes)
    w[present] = len(y) / (present.sum() * counts[present])
    return w[y]


def oversample(y, ratio: float, rng: np.random.Generator) -> np.ndarray:
    """Row indices after random oversampling minority classes to ratio * majority."""
    counts = np.bincount(y)
    target = int(math.floor(ratio * counts.max()))
    idx = [np.arange(len(y))]
    for c, n_c in enumerate(counts):
        if 0 < n_c < target:
            members = np.flatnonzero(y == c)
            idx.append(rng.choice(members, size=target - n_c, replace=True))
    return np.concatenate(idx)


def measure_pipeline_size(tp: TrainedPipeline) -> int:
    """Analytic byte model of the fitted state.

    64 header bytes per stored component, 8 bytes per fitted parameter, and
    8 bytes per stored training cell for instance-based classifiers.
    """
    params = sum(c.param_count() for c in tp.components)
    instance = tp.classifier.stored_rows * getattr(tp.classifier, "X_", np.empty((0, 0))).shape[1] \
        if tp.classifier.stored_rows else 0
    return HEADER_BYTES * len(tp.components) + WORD_BYTES * (params + instance)


def _features_of(rows) -> np.ndarray:
    X = rows.X if isinstance(rows, Dataset) else rows
    try:
        X = np.asarray(X, dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise DataFormatError(f"feature cells must be numeric codes: {exc}") from None
    if X.ndim == 1 and X.size == 0:
        X = X.reshape(0, 0)
    if X.ndim != 2:
        raise DataFormatError("features must be a 2-D matrix")
    return X


def fit(candidate: PipelineCandidate, train: Dataset, seed: int = 0,
        clock: Clock = default_clock) -> TrainedPipeline:
    """Fit the candidate pipeline on ``train``; training time wraps the whole fit."""
    if len(train) == 0:
        raise DataFormatError("cannot fit on an empty training set")
    X = _features_of(train)
    if X.shape[1] != len(train.nominal):
        raise DataFormatError("training matrix width disagrees with the column schema")
    rng = np.random.default_rng(seed)
    start = clock()
    imputer = Imputer(candidate["imputation"]).fit(X, train.nominal)
    Xi = imputer.transform(X)
    encoder = Encoder(candidate["encoding"]).fit(Xi, train.nominal)
    Xe = encoder.transform(Xi)
    scaler = Scaler(candidate["scaling"]).fit(Xe)
    Xs = scaler.transform(Xe)
    y = train.y
    if candidate["sampling"] == "random_oversample":
        idx = oversample(y, candidate["random_oversample.ratio"], rng)
        Xs, y = Xs[idx], y[idx]
    weights = class_weights(y, train.n_classes) if candidate["class_weighting"] == "balanced" else None
    clf = make_classifier(candidate).fit(Xs, y, train.n_classes, weights, int(rng.integers(2**31)))
    elapsed = max(0.0, clock() - start)
    tp = TrainedPipeline(candidate, imputer, encoder, scaler, clf, X.shape[1], train.n_classes,
                         len(train), elapsed)
    object.__setattr__(tp, "size_bytes", measure_pipeline_size(tp))
    return tp


def predict(tp: TrainedPipeline, rows, clock: Clock = default_clock) -> tuple[np.ndarray, float]:
    """Labels plus wall time per predicted row (0 for zero rows)."""
    X = _features_of(rows)
    if len(X) == 0:
        return np.empty(0, dtype=np.int64), 0.0
    if X.shape[1] != tp.n_features:
        raise DataFormatError(f"expected {tp.n_features} columns, got {X.shape[1]}")
    start = clock()
    labels = tp.classifier.predict(tp.transform(X))
    elapsed = max(0.0, clock() - start)
    return np.asarray(labels, dtype=np.int64), elapsed / len(X)


def evaluate(tp: TrainedPipeline, validation: Dataset, clock: Clock = default_clock,
             labels: np.ndarray | None = None) -> tuple[PipelineMetrics, np.ndarray]:
    """Measure every constraint-relevant metric on ``validation``."""
    pred, per_row = predict(tp, validation, clock)
    if labels is not None:
        pred = labels
    ba = balanced_accuracy(validation.y, pred) if len(validation) else 0.0
    eo = 1.0 if validation.sensitive is None else equal_opportunity(validation.y, pred,
                                                                     validation.sensitive)
    return PipelineMetrics(ba, tp.training_time, per_row, tp.size_bytes, eo), pred
