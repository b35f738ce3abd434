"""Decision trees and random forests over numeric feature matrices.

The same forest serves three roles: the random-forest classifier of the
learner zoo, the optimizer's surrogate, and the meta-models. Forests keep
their trees individually so the spread of per-tree predictions can be used
as an uncertainty estimate.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import InvalidInputError
from ._tree import ENTROPY, GINI, MSE, apply_tree, build_tree, forest_values

CRITERIA = {"gini": GINI, "entropy": ENTROPY, "mse": MSE}


@dataclass(frozen=True)
class TreeModel:
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray  # (n_nodes, n_out): class fractions or the regression mean
    depth: int

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    @property
    def n_leaves(self) -> int:
        return int(np.sum(self.feature < 0))

    def predict_values(self, X: np.ndarray) -> np.ndarray:
        X = np.ascontiguousarray(X, dtype=np.float64)
        return self.value[apply_tree(X, self.feature, self.threshold, self.left, self.right)]

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
            "depth": int(self.depth),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TreeModel":
        return cls(
            feature=np.asarray(d["feature"], dtype=np.int64),
            threshold=np.asarray(d["threshold"], dtype=np.float64),
            left=np.asarray(d["left"], dtype=np.int64),
            right=np.asarray(d["right"], dtype=np.int64),
            value=np.asarray(d["value"], dtype=np.float64).reshape(len(d["feature"]), -1),
            depth=int(d["depth"]),
        )


def fit_tree(X, y, *, n_classes: int = 0, criterion: str = "gini", max_depth: int | None = None,
             min_samples_split: int = 2, min_samples_leaf: int = 1, max_features: int | None = None,
             sample_weight=None, counts=None, seed: int = 0) -> TreeModel:
    """Fit one CART tree. ``n_classes == 0`` selects regression (MSE)."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    n, f = X.shape
    if n == 0:
        raise InvalidInputError("cannot fit a tree on zero rows")
    y = np.asarray(y, dtype=np.float64)
    w = np.ones(n) if sample_weight is None else np.asarray(sample_weight, dtype=np.float64)
    c = np.ones(n, dtype=np.int64) if counts is None else np.asarray(counts, dtype=np.int64)
    crit = MSE if n_classes == 0 else CRITERIA[criterion]
    feature, threshold, left, right, value, depth = build_tree(
        X, y, w, c, int(n_classes), crit,
        -1 if max_depth is None else int(max_depth),
        int(min_samples_split), int(min_samples_leaf),
        f if max_features is None else max(1, min(f, int(max_features))),
        int(seed) % (2**32),
    )
    return TreeModel(feature, threshold, left, right, value, int(depth))


def resolve_max_features(spec, n_features: int) -> int:
    if spec is None or spec == "all":
        return n_features
    if spec == "sqrt":
        return max(1, int(math.sqrt(n_features)))
    if spec == "log2":
        return max(1, int(math.log2(n_features))) if n_features > 1 else 1
    if spec == "third":
        return max(1, n_features // 3)
    if isinstance(spec, float):
        return max(1, int(spec * n_features))
    return max(1, min(n_features, int(spec)))


class RandomForestModel:
    """Bagged CART trees with per-node feature subsampling.

    ``mode`` is ``"regression"`` or ``"classification"``. For
    classification every tree outputs class fractions and the forest
    averages them.
    """

    def __init__(self, trees: list[TreeModel], mode: str, n_classes: int = 0,
                 n_features: int | None = None):
        if not trees:
            raise InvalidInputError("a forest needs at least one tree")
        if mode not in ("regression", "classification"):
            raise ValueError(f"unknown mode {mode!r}")
        self.trees = list(trees)
        self.mode = mode
        self.n_classes = n_classes
        self.n_features = n_features
        self._packed = None

    def __len__(self) -> int:
        return len(self.trees)

    def _pack(self):
        if self._packed is None:
            offsets = np.zeros(len(self.trees) + 1, dtype=np.int64)
            offsets[1:] = np.cumsum([t.n_nodes for t in self.trees])
            self._packed = (
                np.concatenate([t.feature for t in self.trees]),
                np.concatenate([t.threshold for t in self.trees]),
                np.concatenate([t.left for t in self.trees]),
                np.concatenate([t.right for t in self.trees]),
                np.ascontiguousarray(np.concatenate([t.value for t in self.trees])),
                offsets,
            )
        return self._packed

    def per_tree(self, X) -> np.ndarray:
        """Outputs of every tree, shape (n_trees, n_rows, n_out)."""
        X = np.ascontiguousarray(np.atleast_2d(np.asarray(X, dtype=np.float64)))
        f, thr, l, r, v, off = self._pack()
        return forest_values(X, f, thr, l, r, v, off, v.shape[1])

    def per_tree_scalar(self, X) -> np.ndarray:
        """Per-tree scalar outputs: regression value or P(class 1)."""
        out = self.per_tree(X)
        if self.mode == "regression":
            return out[:, :, 0]
        return out[:, :, 1] if out.shape[2] > 1 else np.zeros(out.shape[:2])

    def predict_proba(self, X) -> np.ndarray:
        return self.per_tree(X).mean(axis=0)

    def to_dict(self) -> dict:
        return {"mode": self.mode, "n_classes": self.n_classes, "n_features": self.n_features,
                "trees": [t.to_dict() for t in self.trees]}

    @classmethod
    def from_dict(cls, d: dict) -> "RandomForestModel":
        return cls([TreeModel.from_dict(t) for t in d["trees"]], d["mode"],
                   d.get("n_classes", 0), d.get("n_features"))


def forest_fit(X, y, mode: str = "regression", T: int = 10, seed: int = 0, *,
               max_depth: int | None = None, max_features="third", min_samples_leaf: int = 1,
               bootstrap: bool = True, criterion: str = "gini", n_classes: int | None = None,
               sample_weight=None) -> RandomForestModel:
    X = np.ascontiguousarray(np.asarray(X, dtype=np.float64))
    if X.ndim != 2 or X.shape[0] == 0:
        raise InvalidInputError("forest_fit needs a non-empty 2-D training matrix")
    n, f = X.shape
    y = np.asarray(y, dtype=np.float64)
    if len(y) != n:
        raise InvalidInputError("X and y lengths differ")
    if T < 1:
        raise InvalidInputError("T must be >= 1")
    if mode == "classification":
        n_classes = int(n_classes if n_classes is not None else max(2, int(y.max()) + 1))
    else:
        n_classes = 0
    mf = resolve_max_features(max_features, f)
    rng = np.random.default_rng(seed)
    trees = []
    for _ in range(T):
        counts = rng.multinomial(n, np.full(n, 1.0 / n)) if bootstrap else None
        trees.append(fit_tree(X, y, n_classes=n_classes, criterion=criterion, max_depth=max_depth,
                              min_samples_leaf=min_samples_leaf, max_features=mf,
                              sample_weight=sample_weight, counts=counts,
                              seed=int(rng.integers(2**31))))
    return RandomForestModel(trees, mode, n_classes, f)


PREDICT_CHUNK = 8192


def _chunked(model: RandomForestModel, X, reduce) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if len(X) <= PREDICT_CHUNK:
        return reduce(model.per_tree_scalar(X))
    return np.concatenate([reduce(model.per_tree_scalar(X[i:i + PREDICT_CHUNK]))
                           for i in range(0, len(X), PREDICT_CHUNK)])


def forest_predict(model: RandomForestModel, X) -> np.ndarray:
    """Mean of the per-tree outputs (regression value or P(class 1))."""
    return _chunked(model, X, lambda a: a.mean(axis=0))


def forest_predict_std(model: RandomForestModel, X) -> np.ndarray:
    """Population standard deviation of the per-tree outputs."""
    return _chunked(model, X, lambda a: a.std(axis=0))
