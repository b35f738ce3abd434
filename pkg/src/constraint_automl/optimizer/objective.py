from __future__ import annotations

import math

import numpy as np

from ..constraints import ConstraintEvaluation
from ..data import Dataset


def constrained_objective(ev: ConstraintEvaluation, ba: float) -> float:
    """Constraint violations first, balanced accuracy second.

    Returns ``-sum(delta)`` while any constraint is violated, else ``ba``, so
    every violator ranks strictly below every satisfying pipeline.
    """
    total = ev.total
    return -total + (ba if total == 0.0 else 0.0)


def stratified_split(y: np.ndarray, n_classes: int, holdout_fraction: float,
                     rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Index arrays (train, validation) with per-class largest-remainder allocation.

    The validation size is ``floor(n * holdout_fraction)`` in total; each
    class keeps at least one training row.
    """
    n = len(y)
    counts = np.bincount(y, minlength=n_classes)
    target = int(math.floor(n * holdout_fraction))
    exact = counts * holdout_fraction
    alloc = np.floor(exact).astype(np.int64)
    cap = np.maximum(counts - 1, 0)
    alloc = np.minimum(alloc, cap)
    remainder = exact - np.floor(exact)
    # hand out the remaining slots by largest remainder, lowest class first on ties
    order = sorted(range(n_classes), key=lambda c: (-remainder[c], c))
    missing = target - int(alloc.sum())
    for c in order:
        if missing <= 0:
            break
        if alloc[c] < cap[c]:
            alloc[c] += 1
            missing -= 1
    train, val = [], []
    for c in range(n_classes):
        members = np.flatnonzero(y == c)
        members = members[rng.permutation(len(members))]
        val.append(members[:alloc[c]])
        train.append(members[alloc[c]:])
    return np.sort(np.concatenate(train)), np.sort(np.concatenate(val))


def split(dataset: Dataset, holdout_fraction: float, seed: int, reshuffle_round: int = 0,
          reshuffle: bool = False) -> tuple[Dataset, Dataset]:
    """Stratified hold-out split; the seed stream depends on the round only when reshuffling."""
    rng = np.random.default_rng([int(seed), int(reshuffle_round) if reshuffle else 0])
    tr, va = stratified_split(dataset.y, dataset.n_classes, holdout_fraction, rng)
    return dataset.subset(tr), dataset.subset(va)
