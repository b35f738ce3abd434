"""Meta-training data: the instance store and the cold-start / alternating samplers."""
from __future__ import annotations

import json
import os
import threading
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from ..clock import Clock, default_clock
from ..constraints import EQUAL_OPPORTUNITY, SEARCH_TIME, ConstraintRegistry, ConstraintSet, derive_thresholds
from ..data import Dataset
from ..errors import DataFormatError, InvalidInputError
from ..learners.forest import forest_fit, forest_predict_std
from ..metafeatures import (EO_SENTINEL, UPPER_SENTINEL, constraint_features, constraint_slots, dataset_features,
                            encode)
from ..optimizer.config import AutoMLConfiguration
from ..search_space import (ActivationMask, SearchSpaceTree, _levels, build_default_space,
                            random_normalized_mask)

ACQ_TREES = 10
ACQ_POOL = 64
ACQ_MIN_LEAF = 5

Labeler = Callable[[Dataset, ConstraintSet, AutoMLConfiguration, int], float]


@dataclass(frozen=True)
class MetaInstance:
    features: np.ndarray
    label: float
    group: str
    timestamp: int
    source: str = "random"  # "cold", "random" or "uncertainty"

    def to_json(self) -> str:
        return json.dumps({"features": [float(v) for v in self.features], "label": float(self.label),
                           "group": self.group, "timestamp": int(self.timestamp), "source": self.source})

    @classmethod
    def from_json(cls, line: str) -> "MetaInstance":
        d = json.loads(line)
        return cls(np.asarray(d["features"], dtype=np.float64), float(d["label"]), d["group"],
                   int(d["timestamp"]), d.get("source", "random"))


class MetaDataset:
    """Append-only instance store; appends are serialized, snapshots are lock-free copies.

    With ``path`` set, every append is also written (and flushed) as one
    JSONL line, so an interrupted run can be resumed with :meth:`load`.
    """

    def __init__(self, instances: Sequence[MetaInstance] = (), path: str | os.PathLike | None = None):
        items = list(instances)
        for a, b in zip(items, items[1:]):
            if b.timestamp <= a.timestamp:
                raise InvalidInputError("timestamps must be strictly increasing")
        self._items = items
        self._lock = threading.Lock()
        self.path = None if path is None else os.fspath(path)

    def __len__(self) -> int:
        return len(self._items)

    def __iter__(self):
        return iter(self.snapshot())

    def __getitem__(self, i) -> MetaInstance:
        return self._items[i]

    def snapshot(self) -> tuple[MetaInstance, ...]:
        return tuple(self._items)

    def append(self, features, label: float, group: str, source: str = "random") -> MetaInstance:
        features = np.asarray(features, dtype=np.float64)
        if not np.all(np.isfinite(features)):
            raise InvalidInputError("meta-features must be finite")
        if not 0.0 <= label <= 1.0:
            raise InvalidInputError("label must lie in [0, 1]")
        with self._lock:
            ts = self._items[-1].timestamp + 1 if self._items else 0
            inst = MetaInstance(features, float(label), group, ts, source)
            self._items.append(inst)
            if self.path is not None:
                with open(self.path, "a", encoding="utf-8") as fh:
                    fh.write(inst.to_json() + "\n")
        return inst

    def arrays(self) -> tuple[np.ndarray, np.ndarray, list[str], np.ndarray]:
        """(X, y, groups, timestamps) of a snapshot, in timestamp order."""
        items = self.snapshot()
        if not items:
            return np.empty((0, 0)), np.empty(0), [], np.empty(0, dtype=np.int64)
        return (np.stack([i.features for i in items]), np.array([i.label for i in items]),
                [i.group for i in items], np.array([i.timestamp for i in items], dtype=np.int64))

    def write_jsonl(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for inst in self.snapshot():
                fh.write(inst.to_json() + "\n")

    @classmethod
    def load(cls, path, resume: bool = True) -> "MetaDataset":
        """Read a JSONL file; with ``resume`` further appends go to the same file."""
        items = []
        try:
            with open(path, encoding="utf-8") as fh:
                for n, line in enumerate(fh, 1):
                    if line.strip():
                        items.append(MetaInstance.from_json(line))
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise DataFormatError(f"{path}:{n}: bad meta instance ({exc})") from None
        return cls(items, path if resume else None)


@dataclass
class MetaSpaces:
    """Where meta-training draws datasets, constraints and configurations from.

    ``thresholds`` maps each application constraint kind to its grid of
    candidate thresholds (percentiles of observed metrics). Each kind is
    included in a drawn constraint set with probability ``p_constraint``.
    """

    datasets: list
    thresholds: dict
    search_times: list
    tree: SearchSpaceTree = field(default_factory=build_default_space)
    registry: ConstraintRegistry | None = None
    p_constraint: float = 0.5
    p_active: float = 0.5
    holdout_range: tuple = (0.1, 0.5)

    def __post_init__(self):
        if not self.datasets:
            raise InvalidInputError("the dataset repository is empty")
        if not self.search_times:
            raise InvalidInputError("need at least one search time")
        self._dfeat = [dataset_features(d) for d in self.datasets]

    @classmethod
    def from_samples(cls, datasets, samples: dict, percentiles: Sequence[float], search_times, **kw):
        """Threshold grids from metric samples via :func:`derive_thresholds`."""
        return cls(list(datasets), derive_thresholds(samples, percentiles), list(search_times), **kw)

    def sample_dataset(self, rng) -> int:
        return int(rng.integers(len(self.datasets)))

    def sample_constraints(self, rng) -> ConstraintSet:
        t = {SEARCH_TIME: self.search_times[int(rng.integers(len(self.search_times)))]}
        for kind, grid in self.thresholds.items():
            if rng.random() < self.p_constraint:
                t[kind] = grid[int(rng.integers(len(grid)))]
        return ConstraintSet(t)

    def sample_omega(self, rng) -> AutoMLConfiguration:
        mask = random_normalized_mask(self.tree, rng, self.p_active)
        lo, hi = self.holdout_range
        holdout = round(float(rng.uniform(lo, hi)), 2)
        flags = rng.random(3) < 0.5
        return AutoMLConfiguration(mask, holdout, bool(flags[0]), bool(flags[1]), bool(flags[2]))

    def sample_task(self, rng) -> tuple[int, ConstraintSet]:
        return self.sample_dataset(rng), self.sample_constraints(rng)

    def sample_triple(self, rng) -> tuple[int, ConstraintSet, AutoMLConfiguration]:
        d = self.sample_dataset(rng)
        return d, self.sample_constraints(rng), self.sample_omega(rng)

    def dataset_vector(self, d: int) -> np.ndarray:
        return self._dfeat[d]

    def encode(self, d: int, c: ConstraintSet, omega: AutoMLConfiguration) -> np.ndarray:
        return encode(self._dfeat[d], constraint_features(c, self.registry), omega)

    def sample_pool(self, rng, k: int):
        """``k`` encoded random triples drawn in bulk, plus a builder for row ``i``'s triple.

        Same distribution as :meth:`sample_triple`; only the rows that are
        actually chosen get turned into objects.
        """
        d = rng.integers(len(self.datasets), size=k)
        st = np.asarray(self.search_times, dtype=np.float64)[rng.integers(len(self.search_times), size=k)]
        drawn = {}
        for kind, grid in self.thresholds.items():
            on = rng.random(k) < self.p_constraint
            drawn[kind] = np.where(on, np.asarray(grid, dtype=np.float64)[rng.integers(len(grid), size=k)], np.nan)
        bits = rng.random((k, len(self.tree))) < self.p_active
        for child, parent in _levels(self.tree):
            bits[:, child] &= bits[:, parent]
        lo, hi = self.holdout_range
        holdout = np.round(rng.uniform(lo, hi, k), 2)
        flags = rng.random((k, 3)) < 0.5
        cols = []
        for kind in constraint_slots(self.registry):
            if kind == SEARCH_TIME:
                cols.append(st)
            else:
                fill = EO_SENTINEL if kind == EQUAL_OPPORTUNITY else UPPER_SENTINEL
                cols.append(np.nan_to_num(drawn[kind], nan=fill) if kind in drawn else np.full(k, fill))
        X = np.hstack([np.stack([self._dfeat[i] for i in d]), np.stack(cols, axis=1), holdout[:, None],
                       flags.astype(np.float64), bits.astype(np.float64)])

        def triple(i: int):
            t = {SEARCH_TIME: float(st[i])}
            t.update({kind: float(v[i]) for kind, v in drawn.items() if not np.isnan(v[i])})
            omega = AutoMLConfiguration(ActivationMask(bits[i].tolist()), float(holdout[i]),
                                        bool(flags[i, 0]), bool(flags[i, 1]), bool(flags[i, 2]))
            return int(d[i]), ConstraintSet(t), omega

        return X, triple


def _label_and_append(meta: MetaDataset, spaces: MetaSpaces, labeler: Labeler, triple, seed: int,
                      source: str) -> MetaInstance:
    d, c, omega = triple
    label = float(labeler(spaces.datasets[d], c, omega, seed))
    return meta.append(spaces.encode(d, c, omega), label, spaces.datasets[d].name, source)


def cold_start(spaces: MetaSpaces, K: int, labeler: Labeler, rng, meta: MetaDataset | None = None) -> MetaDataset:
    """K instances from independent uniform draws of (dataset, constraints, configuration)."""
    if K < 1:
        raise InvalidInputError("K must be >= 1")
    rng = np.random.default_rng(rng)
    meta = MetaDataset() if meta is None else meta
    for _ in range(K):
        triple = spaces.sample_triple(rng)
        _label_and_append(meta, spaces, labeler, triple, int(rng.integers(2**31)), "cold")
    return meta


def acquire_uncertain(meta: MetaDataset, spaces: MetaSpaces, rng, iterations: int = ACQ_POOL,
                      n_trees: int = ACQ_TREES):
    """Random triple with the largest across-tree spread of the win-fraction forest."""
    X, y, _, _ = meta.arrays()
    if len(y) == 0:
        raise InvalidInputError("uncertainty sampling needs a nonempty meta-dataset")
    model = forest_fit(X, y, "regression", n_trees, int(rng.integers(2**31)), max_features="sqrt",
                       min_samples_leaf=ACQ_MIN_LEAF)
    Xp, triple = spaces.sample_pool(rng, iterations)
    return triple(int(np.argmax(forest_predict_std(model, Xp))))


def alternating_sample(meta: MetaDataset, spaces: MetaSpaces, labeler: Labeler, seed: int = 0, *,
                       iterations: int | None = None, time_limit: float | None = None,
                       clock: Clock = default_clock, workers: int = 1, p_uncertain: float = 0.5,
                       acq_pool: int = ACQ_POOL, acq_trees: int = ACQ_TREES) -> MetaDataset:
    """Grow ``meta`` by labeling random or uncertainty-chosen triples (fair coin per step).

    Stops after ``iterations`` appended instances or once ``time_limit``
    seconds have passed on ``clock``. Workers run in threads with disjoint
    seed streams; each reads the latest snapshot and appends under the
    store's lock.
    """
    if len(meta) == 0:
        raise InvalidInputError("run cold_start first")
    if iterations is None and time_limit is None:
        raise InvalidInputError("need an iteration or time limit")
    start = clock()
    claimed = [0]
    claim_lock = threading.Lock()
    streams = np.random.SeedSequence(seed).spawn(workers)

    def work(w: int) -> None:
        rng = np.random.default_rng(streams[w])
        while True:
            if time_limit is not None and clock() - start >= time_limit:
                return
            with claim_lock:
                if iterations is not None and claimed[0] >= iterations:
                    return
                claimed[0] += 1
            if rng.random() < p_uncertain:
                triple, source = acquire_uncertain(meta, spaces, rng, acq_pool, acq_trees), "uncertainty"
            else:
                triple, source = spaces.sample_triple(rng), "random"
            _label_and_append(meta, spaces, labeler, triple, int(rng.integers(2**31)), source)

    if workers == 1:
        work(0)
        return meta
    errors = []

    def guarded(w):
        try:
            work(w)
        except BaseException as exc:  # surfaced after join
            errors.append(exc)

    threads = [threading.Thread(target=guarded, args=(w,), daemon=True) for w in range(workers)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    if errors:
        raise errors[0]
    return meta
