"""Classifier zoo operating on already-encoded numeric matrices.

Every classifier exposes ``fit(X, y, n_classes, sample_weight, seed)``,
``predict(X)`` and ``param_count()``; instance-based models additionally
report ``stored_rows``. Ties in votes or scores go to the lowest class index.
"""
from __future__ import annotations

import math

import numpy as np
from numba import njit

from .forest import fit_tree, forest_fit, resolve_max_features


class Classifier:
    stored_rows = 0

    def param_count(self) -> int:
        raise NotImplementedError

    def fit(self, X, y, n_classes, sample_weight=None, seed=0):
        raise NotImplementedError

    def predict(self, X) -> np.ndarray:
        raise NotImplementedError


class KNNClassifier(Classifier):
    def __init__(self, n_neighbors=5, weights="uniform", p=2):
        self.n_neighbors = int(n_neighbors)
        self.weights = weights
        self.p = int(p)

    def fit(self, X, y, n_classes, sample_weight=None, seed=0):
        self.X_ = np.asarray(X, dtype=np.float64).copy()
        self.y_ = np.asarray(y, dtype=np.int64).copy()
        self.w_ = np.ones(len(y)) if sample_weight is None else np.asarray(sample_weight, float)
        self.n_classes = n_classes
        self.stored_rows = len(y)
        return self

    def param_count(self) -> int:
        return self.stored_rows  # labels; feature rows are counted as instance storage

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        k = min(self.n_neighbors, len(self.y_))
        out = np.empty(len(X), dtype=np.int64)
        for start in range(0, len(X), 512):
            chunk = X[start:start + 512]
            diff = np.abs(chunk[:, None, :] - self.X_[None, :, :])
            d = np.sqrt((diff ** 2).sum(axis=2)) if self.p == 2 else diff.sum(axis=2)
            nn = np.argsort(d, axis=1, kind="stable")[:, :k]
            nd = np.take_along_axis(d, nn, axis=1)
            if self.weights == "distance":
                zero = nd <= 1e-12
                vw = np.where(zero.any(axis=1, keepdims=True), zero.astype(float),
                              1.0 / np.maximum(nd, 1e-12))
            else:
                vw = np.ones_like(nd)
            vw = vw * self.w_[nn]
            votes = np.zeros((len(chunk), self.n_classes))
            np.add.at(votes, (np.repeat(np.arange(len(chunk)), k), self.y_[nn].ravel()), vw.ravel())
            out[start:start + len(chunk)] = votes.argmax(axis=1)
        return out


class GaussianNBClassifier(Classifier):
    def __init__(self, var_smoothing=1e-9, priors="empirical"):
        self.var_smoothing = float(var_smoothing)
        self.priors = priors

    def fit(self, X, y, n_classes, sample_weight=None, seed=0):
        X = np.asarray(X, dtype=np.float64)
        w = np.ones(len(y)) if sample_weight is None else np.asarray(sample_weight, float)
        C, F = n_classes, X.shape[1]
        eps = self.var_smoothing * max(float(np.var(X, axis=0).max()) if F else 0.0, 1e-12)
        self.theta_ = np.zeros((C, F))
        self.var_ = np.ones((C, F))
        wc = np.zeros(C)
        for c in range(C):
            m = y == c
            wc[c] = w[m].sum()
            if wc[c] > 0:
                self.theta_[c] = np.average(X[m], axis=0, weights=w[m])
                self.var_[c] = np.average((X[m] - self.theta_[c]) ** 2, axis=0, weights=w[m])
        self.var_ += eps
        present = wc > 0
        if self.priors == "uniform":
            prior = present / present.sum()
        else:
            prior = wc / wc.sum()
        with np.errstate(divide="ignore"):
            self.log_prior_ = np.log(prior)
        self.n_classes = C
        return self

    def param_count(self) -> int:
        C, F = self.theta_.shape
        return 2 * C * F + C

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        ll = -0.5 * (np.log(2 * np.pi * self.var_).sum(axis=1)[None, :]
                     + (((X[:, None, :] - self.theta_[None]) ** 2) / self.var_[None]).sum(axis=2))
        return (ll + self.log_prior_[None, :]).argmax(axis=1)


def _tree_params(tree, n_classes: int) -> int:
    internal = tree.n_nodes - tree.n_leaves
    return 4 * internal + n_classes * tree.n_leaves


class DecisionTreeClassifier(Classifier):
    def __init__(self, criterion="gini", max_depth=None, min_samples_split=2, min_samples_leaf=1):
        self.criterion = criterion
        self.max_depth = max_depth
        self.min_samples_split = int(min_samples_split)
        self.min_samples_leaf = int(min_samples_leaf)

    def fit(self, X, y, n_classes, sample_weight=None, seed=0):
        self.tree_ = fit_tree(X, y, n_classes=n_classes, criterion=self.criterion,
                              max_depth=self.max_depth, min_samples_split=self.min_samples_split,
                              min_samples_leaf=self.min_samples_leaf, sample_weight=sample_weight,
                              seed=seed)
        self.n_classes = n_classes
        return self

    @property
    def depth(self) -> int:
        return self.tree_.depth

    def param_count(self) -> int:
        return _tree_params(self.tree_, self.n_classes)

    def predict(self, X) -> np.ndarray:
        return self.tree_.predict_values(X).argmax(axis=1)


class RandomForestClassifier(Classifier):
    def __init__(self, n_estimators=10, criterion="gini", max_features="sqrt", max_depth=None,
                 min_samples_leaf=1, bootstrap=True):
        self.n_estimators = int(n_estimators)
        self.criterion = criterion
        self.max_features = max_features
        self.max_depth = max_depth
        self.min_samples_leaf = int(min_samples_leaf)
        self.bootstrap = bool(bootstrap)

    def fit(self, X, y, n_classes, sample_weight=None, seed=0):
        self.forest_ = forest_fit(X, y, "classification", self.n_estimators, seed,
                                  max_depth=self.max_depth, max_features=self.max_features,
                                  min_samples_leaf=self.min_samples_leaf, bootstrap=self.bootstrap,
                                  criterion=self.criterion, n_classes=n_classes,
                                  sample_weight=sample_weight)
        self.n_classes = n_classes
        return self

    @property
    def depth(self) -> int:
        return max(t.depth for t in self.forest_.trees)

    def param_count(self) -> int:
        return sum(_tree_params(t, self.n_classes) for t in self.forest_.trees)

    def predict(self, X) -> np.ndarray:
        return self.forest_.predict_proba(X).argmax(axis=1)


@njit(cache=True)
def _sgd_epochs(X, T, w, W, alpha, eta0, n_epochs, hinge, seed):
    # X has a trailing bias column; T holds +-1 targets per one-vs-rest head
    np.random.seed(seed)
    n, f = X.shape
    heads = W.shape[0]
    t = 0
    for _ in range(n_epochs):
        order = np.random.permutation(n)
        for idx in order:
            t += 1
            eta = eta0 / (1.0 + alpha * eta0 * t)
            for h in range(heads):
                margin = 0.0
                for j in range(f):
                    margin += W[h, j] * X[idx, j]
                yt = T[idx, h]
                if hinge:
                    g = -yt if yt * margin < 1.0 else 0.0
                else:
                    z = yt * margin
                    if z > 30.0:
                        g = 0.0
                    elif z < -30.0:
                        g = -yt
                    else:
                        g = -yt / (1.0 + math.exp(z))
                g *= w[idx]
                for j in range(f - 1):
                    W[h, j] -= eta * (g * X[idx, j] + alpha * W[h, j])
                W[h, f - 1] -= eta * g
    return W


class SGDClassifier(Classifier):
    """Linear model trained by SGD on logistic or hinge loss (one-vs-rest)."""

    def __init__(self, loss="log", alpha=1e-4, n_epochs=5, eta0=0.01):
        self.loss = loss
        self.alpha = float(alpha)
        self.n_epochs = int(n_epochs)
        self.eta0 = float(eta0)

    def fit(self, X, y, n_classes, sample_weight=None, seed=0):
        X = np.asarray(X, dtype=np.float64)
        Xb = np.ascontiguousarray(np.column_stack([X, np.ones(len(X))]))
        heads = 1 if n_classes == 2 else n_classes
        T = np.empty((len(y), heads))
        if heads == 1:
            T[:, 0] = np.where(y == 1, 1.0, -1.0)
        else:
            for c in range(heads):
                T[:, c] = np.where(y == c, 1.0, -1.0)
        w = np.ones(len(y)) if sample_weight is None else np.asarray(sample_weight, float)
        W = np.zeros((heads, Xb.shape[1]))
        self.coef_ = _sgd_epochs(Xb, T, w, W, self.alpha, self.eta0, self.n_epochs,
                                 self.loss == "hinge", int(seed) % (2**32))
        self.n_classes = n_classes
        return self

    def param_count(self) -> int:
        return int(self.coef_.size)

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        scores = X @ self.coef_[:, :-1].T + self.coef_[:, -1]
        if self.coef_.shape[0] == 1:
            return (scores[:, 0] > 0).astype(np.int64)
        return scores.argmax(axis=1)


def make_classifier(candidate) -> Classifier:
    name = candidate.classifier
    p = candidate.params(name)
    if name == "knn":
        return KNNClassifier(p["n_neighbors"], p["weights"], p["p"])
    if name == "gaussian_nb":
        return GaussianNBClassifier(p["var_smoothing"], p["priors"])
    if name == "decision_tree":
        return DecisionTreeClassifier(p["criterion"], p["max_depth"], p["min_samples_split"],
                                      p["min_samples_leaf"])
    if name == "random_forest":
        return RandomForestClassifier(p["n_estimators"], p["criterion"], p["max_features"],
                                      p["max_depth"], p["min_samples_leaf"], p["bootstrap"])
    if name == "sgd_log":
        return SGDClassifier("log", p["alpha"], p["n_epochs"], p["eta0"])
    if name == "sgd_hinge":
        return SGDClassifier("hinge", p["alpha"], p["n_epochs"], p["eta0"])
    raise ValueError(f"unknown classifier {name!r}")


__all__ = ["KNNClassifier", "GaussianNBClassifier", "DecisionTreeClassifier",
           "RandomForestClassifier", "SGDClassifier", "make_classifier", "resolve_max_features"]
