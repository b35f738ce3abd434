from __future__ import annotations

import math
from typing import Callable, Sequence

import numpy as np

from ..learners.forest import forest_fit
from ..search_space import (ActivationMask, PipelineCandidate, SearchSpaceTree, encode_candidate,
                            sample_candidate)

N_RANDOM_INIT = 10
POOL_SIZE = 64
KAPPA = 1.0
SURROGATE_TREES = 10
MAX_SURROGATE_HISTORY = 512


def ucb_select(X_hist: np.ndarray, y_hist: np.ndarray, X_pool: np.ndarray, kappa: float,
               rng: np.random.Generator, n_trees: int = SURROGATE_TREES) -> int:
    """Index of the pool row maximizing forest mean + kappa * std (first on ties)."""
    model = forest_fit(X_hist, y_hist, "regression", n_trees, int(rng.integers(2**31)),
                       max_features="third", min_samples_leaf=1)
    per_tree = model.per_tree_scalar(X_pool)
    acq = per_tree.mean(axis=0) + kappa * per_tree.std(axis=0)
    return int(np.argmax(acq))


def _training_targets(scores: Sequence[float]) -> np.ndarray:
    y = np.asarray(scores, dtype=np.float64)
    finite = np.isfinite(y)
    if finite.any():
        y = np.where(finite, y, y[finite].min() - 1.0)
    return y


def _features(tree, record, mask) -> np.ndarray:
    # records may cache their encoding to keep proposals linear in history length
    cached = getattr(record, "features", None)
    if cached is not None:
        return cached
    f = encode_candidate(tree, record.candidate, mask)
    try:
        record.features = f
    except AttributeError:
        pass
    return f


def propose_next(history, tree: SearchSpaceTree, mask: ActivationMask, rng: np.random.Generator,
                 n_random_init: int = N_RANDOM_INIT, pool_size: int = POOL_SIZE,
                 kappa: float = KAPPA, n_trees: int = SURROGATE_TREES) -> PipelineCandidate:
    """Next candidate to evaluate.

    ``history`` is a sequence of objects with ``candidate`` and ``score``.
    The first ``n_random_init`` proposals are plain random samples; later
    ones maximize an upper confidence bound from a random-forest surrogate
    over a pool of ``pool_size`` random candidates.
    """
    scored = [h for h in history if not math.isnan(h.score)]
    if len(history) < n_random_init or len(scored) < 2 or not np.isfinite([h.score for h in scored]).any():
        return sample_candidate(tree, mask, rng)
    scored = scored[-MAX_SURROGATE_HISTORY:]
    X = np.stack([_features(tree, h, mask) for h in scored])
    y = _training_targets([h.score for h in scored])
    pool = [sample_candidate(tree, mask, rng) for _ in range(pool_size)]
    Xp = np.stack([encode_candidate(tree, c, mask) for c in pool])
    return pool[ucb_select(X, y, Xp, kappa, rng, n_trees)]


def smbo_maximize(sample: Callable[[np.random.Generator], object], encode: Callable[[object], np.ndarray],
                  objective: Callable[[object], float], iterations: int, rng: np.random.Generator,
                  n_random_init: int = N_RANDOM_INIT, pool_size: int = POOL_SIZE,
                  kappa: float = KAPPA, n_trees: int = SURROGATE_TREES):
    """Generic forest-surrogate SMBO loop; returns (best, best_value, trace).

    The incumbent only changes on strict improvement, so with a flat
    objective it stays at the first proposal.
    """
    xs, ys = [], []
    best, best_val = None, -math.inf
    for i in range(iterations):
        if i < n_random_init or len(xs) < 2:
            point = sample(rng)
        else:
            pool = [sample(rng) for _ in range(pool_size)]
            Xp = np.stack([encode(p) for p in pool])
            point = pool[ucb_select(np.stack(xs), _training_targets(ys), Xp, kappa, rng, n_trees)]
        value = float(objective(point))
        xs.append(encode(point))
        ys.append(value)
        if best is None or value > best_val:
            best, best_val = point, value
    return best, best_val, ys
