"""The two meta-models: win fraction (regression) and win-at-least-once (classification)."""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field

import numpy as np

from ..errors import DataFormatError, InsufficientDataError
from ..learners.forest import RandomForestModel, forest_fit, forest_predict
from .sampling import MetaDataset

MIN_INSTANCES = 20
N_FOLDS = 10
DEFAULT_GRID = {"T": (50, 100), "max_depth": (8, None), "max_features": ("sqrt", "third")}


def r2_score(y, pred) -> float:
    y, pred = np.asarray(y, float), np.asarray(pred, float)
    ss_res = float(np.sum((y - pred) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot == 0.0:
        return 1.0 if ss_res == 0.0 else 0.0
    return 1.0 - ss_res / ss_tot


def f1_score(y, pred) -> float:
    """Binary F1 of class 1; 1.0 when neither truth nor prediction has positives."""
    y, pred = np.asarray(y, bool), np.asarray(pred, bool)
    tp = int(np.sum(y & pred))
    fp = int(np.sum(~y & pred))
    fn = int(np.sum(y & ~pred))
    if tp + fp + fn == 0:
        return 1.0
    return 2 * tp / (2 * tp + fp + fn)


def time_series_folds(n: int, n_folds: int = N_FOLDS) -> list[tuple[np.ndarray, np.ndarray]]:
    """Expanding-window splits over timestamp-ordered rows: train on folds 1..k, validate on k+1."""
    chunks = np.array_split(np.arange(n), n_folds)
    return [(np.concatenate(chunks[:k]), chunks[k]) for k in range(1, n_folds) if len(chunks[k])]


def grid_points(grid: dict) -> list[dict]:
    keys = list(grid)
    return [dict(zip(keys, vals)) for vals in itertools.product(*(grid[k] for k in keys))]


def _fit(X, y, mode, params, seed):
    return forest_fit(X, y, mode, params["T"], seed, max_depth=params["max_depth"],
                      max_features=params["max_features"], n_classes=2 if mode == "classification" else None)


def select_forest(X, y, mode: str, grid: dict, seed: int, n_folds: int = N_FOLDS):
    """Grid point with the best mean time-ordered CV score (first on ties), refit on all rows."""
    folds = time_series_folds(len(y), n_folds)
    scores = []
    for params in grid_points(grid):
        fold_scores = []
        for tr, va in folds:
            model = _fit(X[tr], y[tr], mode, params, seed)
            pred = forest_predict(model, X[va])
            fold_scores.append(r2_score(y[va], pred) if mode == "regression"
                               else f1_score(y[va] > 0.5, pred > 0.5))
        scores.append((params, float(np.mean(fold_scores))))
    best = max(range(len(scores)), key=lambda i: (scores[i][1], -i))
    params = scores[best][0]
    return _fit(X, y, mode, params, seed), params, scores


@dataclass
class MetaModels:
    regression: RandomForestModel
    classification: RandomForestModel
    regression_params: dict = field(default_factory=dict)
    classification_params: dict = field(default_factory=dict)
    cv_scores: dict = field(default_factory=dict)
    n_features: int = 0
    custom_slots: tuple = ()
    space_version: str = "1"

    def win_fraction(self, X) -> np.ndarray:
        return forest_predict(self.regression, X)

    def win_probability(self, X) -> np.ndarray:
        return forest_predict(self.classification, X)

    def to_dict(self) -> dict:
        return {
            "n_features": self.n_features,
            "custom_slots": list(self.custom_slots),
            "space_version": self.space_version,
            "regression_params": self.regression_params,
            "classification_params": self.classification_params,
            "cv_scores": self.cv_scores,
            "regression": self.regression.to_dict(),
            "classification": self.classification.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MetaModels":
        return cls(RandomForestModel.from_dict(d["regression"]), RandomForestModel.from_dict(d["classification"]),
                   d.get("regression_params", {}), d.get("classification_params", {}), d.get("cv_scores", {}),
                   int(d["n_features"]), tuple(d.get("custom_slots", ())), d.get("space_version", "1"))

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, separators=(",", ":"))

    @classmethod
    def load(cls, path) -> "MetaModels":
        try:
            with open(path, encoding="utf-8") as fh:
                return cls.from_dict(json.load(fh))
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise DataFormatError(f"{path}: bad meta-model file ({exc})") from None


def train_meta_models(meta: MetaDataset, seed: int = 0, grid: dict | None = None,
                      n_folds: int = N_FOLDS, custom_slots: tuple = ()) -> MetaModels:
    """Tune and fit both meta-models on a snapshot of ``meta``.

    The regression target is the win fraction, the classification target
    whether the configuration won at all. Hyperparameters are picked by
    time-ordered cross-validation (R^2 and F1 respectively).
    """
    X, y, _, ts = meta.arrays()
    if len(y) < MIN_INSTANCES:
        raise InsufficientDataError(f"need at least {MIN_INSTANCES} meta instances, have {len(y)}")
    order = np.argsort(ts, kind="stable")
    X, y = X[order], y[order]
    grid = grid or DEFAULT_GRID
    reg, reg_params, reg_scores = select_forest(X, y, "regression", grid, seed, n_folds)
    cls_y = (y > 0).astype(np.float64)
    clf, cls_params, cls_scores = select_forest(X, cls_y, "classification", grid, seed, n_folds)
    cv = {"regression_r2": [[p, s] for p, s in reg_scores], "classification_f1": [[p, s] for p, s in cls_scores]}
    return MetaModels(reg, clf, reg_params, cls_params, cv, X.shape[1], tuple(custom_slots))
