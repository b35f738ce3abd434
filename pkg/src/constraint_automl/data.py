"""Tabular datasets: in-memory representation, CSV ingestion, synthetic generators."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DataFormatError


@dataclass(frozen=True, eq=False)
class Dataset:
    """Feature matrix plus integer labels.

    Nominal columns hold integer category codes stored as floats; ``NaN``
    marks a missing cell and ``-1`` a category unseen at ingestion.
    """

    X: np.ndarray
    y: np.ndarray
    nominal: tuple[bool, ...]
    n_classes: int
    name: str = "dataset"
    sensitive: np.ndarray | None = None
    categories: tuple[tuple[str, ...], ...] = ()
    class_names: tuple[str, ...] = ()

    def __post_init__(self):
        X = np.asarray(self.X, dtype=np.float64)
        if X.ndim != 2:
            raise DataFormatError("features must be a 2-D matrix")
        object.__setattr__(self, "X", X)
        y = np.asarray(self.y, dtype=np.int64)
        object.__setattr__(self, "y", y)
        if len(y) != X.shape[0]:
            raise DataFormatError("label count differs from row count")
        if len(self.nominal) != X.shape[1]:
            raise DataFormatError("nominal flags must match the column count")
        object.__setattr__(self, "nominal", tuple(bool(b) for b in self.nominal))
        if self.n_classes < 2:
            raise DataFormatError("need at least two classes")
        if len(y) and (y.min() < 0 or y.max() >= self.n_classes):
            raise DataFormatError("labels must lie in 0..n_classes-1")
        if self.sensitive is not None:
            s = np.asarray(self.sensitive, dtype=np.int64)
            if len(s) != len(y):
                raise DataFormatError("sensitive attribute length differs from row count")
            if len(s) and not np.isin(s, (0, 1)).all():
                raise DataFormatError("sensitive attribute must be binary (0/1)")
            object.__setattr__(self, "sensitive", s)

    def __len__(self) -> int:
        return len(self.y)

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    def check_invariants(self) -> None:
        """Full ingestion-time checks: every class and both groups present."""
        if len(self) == 0:
            raise DataFormatError(f"{self.name}: dataset is empty")
        present = np.unique(self.y)
        if len(present) < 2:
            raise DataFormatError(f"{self.name}: need at least two classes present")
        if self.sensitive is not None and len(np.unique(self.sensitive)) < 2:
            raise DataFormatError(f"{self.name}: both sensitive groups must be represented")

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx, dtype=np.int64)
        return Dataset(self.X[idx], self.y[idx], self.nominal, self.n_classes, self.name,
                       None if self.sensitive is None else self.sensitive[idx],
                       self.categories, self.class_names)

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.y, minlength=self.n_classes)


def _parse_float(cell: str):
    try:
        return float(cell)
    except ValueError:
        return None


def _label_codes(values: Sequence[str]) -> tuple[np.ndarray, tuple[str, ...]]:
    uniq = sorted(set(values))
    if all(_parse_float(u) is not None for u in uniq):
        uniq = sorted(uniq, key=float)
    lookup = {u: i for i, u in enumerate(uniq)}
    return np.array([lookup[v] for v in values], dtype=np.int64), tuple(uniq)


def dataset_from_rows(rows: Sequence[Sequence], nominal: Sequence[bool], labels: Sequence,
                      *, name: str = "dataset", sensitive: Sequence | None = None,
                      categories: Sequence[Sequence[str]] | None = None) -> Dataset:
    """Build a dataset from raw cells (numbers, strings, ``None``/``""`` for missing)."""
    labels = [str(v) for v in labels]
    y, class_names = _label_codes(labels)
    X, cats = encode_cells(rows, nominal, categories)
    sens = None
    if sensitive is not None:
        s, groups = _label_codes([str(v) for v in sensitive])
        if len(groups) > 2:
            raise DataFormatError("sensitive attribute must have at most two groups")
        sens = s
    ds = Dataset(X, y, tuple(nominal), max(2, len(class_names)), name, sens, cats, class_names)
    return ds


def encode_cells(rows: Sequence[Sequence], nominal: Sequence[bool],
                 categories: Sequence[Sequence[str]] | None = None):
    """Turn raw cells into the numeric matrix; learns categories when not given."""
    n_cols = len(nominal)
    learn = categories is None
    cats: list[list[str]] = [[] for _ in range(n_cols)] if learn else [list(c) for c in categories]
    lookups = [{c: i for i, c in enumerate(col)} for col in cats]
    X = np.empty((len(rows), n_cols), dtype=np.float64)
    for i, row in enumerate(rows):
        if len(row) != n_cols:
            raise DataFormatError(f"row {i} has {len(row)} cells, expected {n_cols}")
        for j, cell in enumerate(row):
            if cell is None or (isinstance(cell, str) and cell.strip() == "") or (
                    isinstance(cell, float) and math.isnan(cell)):
                X[i, j] = np.nan
            elif nominal[j]:
                key = str(cell)
                if key not in lookups[j]:
                    if learn:
                        lookups[j][key] = len(cats[j])
                        cats[j].append(key)
                    else:
                        X[i, j] = -1.0
                        continue
                X[i, j] = lookups[j][key]
            else:
                value = cell if isinstance(cell, (int, float)) and not isinstance(cell, bool) \
                    else _parse_float(str(cell))
                if value is None:
                    raise DataFormatError(f"row {i}, column {j}: {cell!r} is not numeric")
                X[i, j] = float(value)
    return X, tuple(tuple(c) for c in cats)


def read_csv(path, target: str, sensitive: str | None = None, name: str | None = None) -> Dataset:
    """Read a headered CSV; column kinds are inferred from the cells.

    A column is numeric when every non-empty cell parses as a number.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataFormatError(f"{path}: empty file") from None
        body = [row for row in reader if row]
    header = [h.strip() for h in header]
    for col in [target] + ([sensitive] if sensitive else []):
        if col not in header:
            raise DataFormatError(f"{path}: column {col!r} not in header")
    for i, row in enumerate(body):
        if len(row) != len(header):
            raise DataFormatError(f"{path}: line {i + 2} has {len(row)} cells, expected {len(header)}")
    t_idx = header.index(target)
    s_idx = header.index(sensitive) if sensitive else None
    feat_idx = [j for j in range(len(header)) if j not in (t_idx, s_idx)]
    nominal = []
    for j in feat_idx:
        cells = [row[j].strip() for row in body if row[j].strip() != ""]
        nominal.append(not all(_parse_float(c) is not None for c in cells))
    rows = [[row[j].strip() for j in feat_idx] for row in body]
    ds = dataset_from_rows(rows, nominal, [row[t_idx].strip() for row in body],
                           name=name or path.stem,
                           sensitive=None if s_idx is None else [row[s_idx].strip() for row in body])
    ds.check_invariants()
    return ds


def write_csv(ds: Dataset, path, target: str = "target", sensitive: str = "sensitive") -> None:
    path = Path(path)
    header = [f"f{j}" for j in range(ds.n_features)] + [target]
    if ds.sensitive is not None:
        header.append(sensitive)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for i in range(len(ds)):
            cells = []
            for j in range(ds.n_features):
                v = ds.X[i, j]
                if np.isnan(v):
                    cells.append("")
                elif ds.nominal[j]:
                    cells.append(ds.categories[j][int(v)] if ds.categories else f"c{int(v)}")
                else:
                    cells.append(repr(float(v)))
            cells.append(ds.class_names[ds.y[i]] if ds.class_names else str(ds.y[i]))
            if ds.sensitive is not None:
                cells.append(str(ds.sensitive[i]))
            w.writerow(cells)


# Synthetic generators ---------------------------------------------------------

def _finish(X, y, nominal, n_classes, name, rng, sensitive=None, missing=0.0):
    if missing > 0:
        holes = rng.random(X.shape) < missing
        X = X.copy()
        X[holes] = np.nan
    cats = tuple(tuple(f"c{k}" for k in range(int(np.nanmax(X[:, j])) + 1)) if nom else ()
                 for j, nom in enumerate(nominal))
    ds = Dataset(X, y, tuple(nominal), n_classes, name, sensitive, cats,
                 tuple(str(k) for k in range(n_classes)))
    ds.check_invariants()
    return ds


def _group(rng, y, X, bias: float):
    # group membership correlated with the label (and thus a fairness hazard)
    p = np.where(y == 1, 0.5 + bias, 0.5 - bias) if y.max() >= 1 else np.full(len(y), 0.5)
    s = (rng.random(len(y)) < p).astype(np.int64)
    if s.min() == s.max():
        s[0] = 1 - s[0]
    return s


def make_blobs(n: int = 300, n_features: int = 4, n_classes: int = 2, spread: float = 1.0,
               seed: int = 0, *, sensitive: bool = False, missing: float = 0.0,
               name: str | None = None) -> Dataset:
    rng = np.random.default_rng(seed)
    centers = rng.normal(0, 3.0, size=(n_classes, n_features))
    y = np.arange(n) % n_classes
    rng.shuffle(y)
    X = centers[y] + rng.normal(0, spread, size=(n, n_features))
    s = _group(rng, y, X, 0.2) if sensitive else None
    return _finish(X, y, [False] * n_features, n_classes, name or f"blobs_{seed}", rng, s, missing)


def make_moons(n: int = 300, noise: float = 0.2, n_noise_features: int = 2, seed: int = 0, *,
               sensitive: bool = False, name: str | None = None) -> Dataset:
    rng = np.random.default_rng(seed)
    y = np.arange(n) % 2
    rng.shuffle(y)
    t = rng.uniform(0, math.pi, n)
    x0 = np.where(y == 0, np.cos(t), 1 - np.cos(t))
    x1 = np.where(y == 0, np.sin(t), 0.5 - np.sin(t))
    X = np.column_stack([x0, x1, rng.normal(0, 1, size=(n, n_noise_features))])
    X[:, :2] += rng.normal(0, noise, size=(n, 2))
    s = _group(rng, y, X, 0.25) if sensitive else None
    return _finish(X, y, [False] * X.shape[1], 2, name or f"moons_{seed}", rng, s)


def make_imbalanced(n: int = 400, n_features: int = 6, n_classes: int = 3, imbalance: float = 0.8,
                    seed: int = 0, *, name: str | None = None) -> Dataset:
    """Multinomial count features with geometrically decaying class priors."""
    rng = np.random.default_rng(seed)
    priors = imbalance ** np.arange(n_classes)
    priors /= priors.sum()
    y = rng.choice(n_classes, size=n, p=priors)
    for k in range(n_classes):  # at least 3 rows per class
        y[k * 3:(k + 1) * 3] = k
    profiles = rng.dirichlet(np.ones(n_features), size=n_classes)
    X = np.stack([rng.multinomial(20, profiles[k]) for k in y]).astype(np.float64)
    return _finish(X, y, [False] * n_features, n_classes, name or f"imbalanced_{seed}", rng)


def make_nominal(n: int = 300, n_nominal: int = 5, n_numeric: int = 2, n_levels: int = 4,
                 seed: int = 0, *, sensitive: bool = False, missing: float = 0.0,
                 name: str | None = None) -> Dataset:
    """Mostly nominal columns; the label depends on a few category effects."""
    rng = np.random.default_rng(seed)
    codes = rng.integers(0, n_levels, size=(n, n_nominal))
    effects = rng.normal(0, 1.0, size=(n_nominal, n_levels))
    numeric = rng.normal(0, 1, size=(n, n_numeric))
    logit = effects[np.arange(n_nominal), codes].sum(axis=1) + numeric[:, 0] if n_numeric else \
        effects[np.arange(n_nominal), codes].sum(axis=1)
    y = (logit + rng.normal(0, 0.5, n) > np.median(logit)).astype(np.int64)
    X = np.column_stack([codes.astype(np.float64), numeric])
    s = _group(rng, y, X, 0.2) if sensitive else None
    return _finish(X, y, [True] * n_nominal + [False] * n_numeric, 2, name or f"nominal_{seed}",
                   rng, s, missing)


def bundled_datasets(split: str = "eval", seed: int = 0) -> list[Dataset]:
    """Eight small synthetic tasks covering the four generator families.

    ``split="train"`` yields a disjoint variant (different seeds and shapes)
    intended as the meta-training repository.
    """
    base = 1000 if split == "train" else 0
    s = seed + base
    if split == "train":
        out = [
            make_blobs(260, 3, 2, 1.6, s + 1, sensitive=True, name="tr_blobs_a"),
            make_blobs(420, 8, 3, 2.5, s + 2, missing=0.05, name="tr_blobs_b"),
            make_blobs(350, 12, 2, 3.0, s + 3, name="tr_blobs_c"),
            make_moons(300, 0.25, 1, s + 4, sensitive=True, name="tr_moons_a"),
            make_moons(500, 0.35, 4, s + 5, name="tr_moons_b"),
            make_imbalanced(380, 5, 3, 0.6, s + 6, name="tr_imbalanced_a"),
            make_imbalanced(450, 9, 4, 0.75, s + 7, name="tr_imbalanced_b"),
            make_nominal(320, 4, 1, 3, s + 8, sensitive=True, name="tr_nominal_a"),
            make_nominal(400, 7, 3, 5, s + 9, missing=0.05, name="tr_nominal_b"),
            make_nominal(240, 3, 0, 6, s + 10, name="tr_nominal_c"),
            make_blobs(600, 5, 4, 2.0, s + 11, name="tr_blobs_d"),
            make_moons(220, 0.15, 0, s + 12, name="tr_moons_c"),
        ]
    else:
        out = [
            make_blobs(300, 4, 2, 2.0, s + 1, sensitive=True, name="blobs_a"),
            make_blobs(400, 10, 3, 2.8, s + 2, missing=0.05, name="blobs_b"),
            make_moons(300, 0.3, 2, s + 3, sensitive=True, name="moons_a"),
            make_moons(450, 0.2, 3, s + 4, name="moons_b"),
            make_imbalanced(400, 6, 3, 0.7, s + 5, name="imbalanced_a"),
            make_imbalanced(350, 8, 2, 0.5, s + 6, name="imbalanced_b"),
            make_nominal(300, 5, 2, 4, s + 7, sensitive=True, name="nominal_a"),
            make_nominal(380, 6, 1, 3, s + 8, missing=0.05, name="nominal_b"),
        ]
    return out
