"""Synthetic meta-learning fixture with a known winning rule.

A configuration beats the default exactly when ensembling is on and the
task's training-time threshold is below 0.1 s. Labels come from that rule
directly, so the meta-learning pipeline can be checked end to end without
running any pipeline search.
"""
import numpy as np

from constraint_automl.constraints import PIPELINE_SIZE, TRAINING_TIME, ConstraintSet, SEARCH_TIME
from constraint_automl.data import bundled_datasets
from constraint_automl.metalearning import (MetaSpaces, alternating_sample, cold_start, mine_pool, rank_pool,
                                            train_meta_models)

TT_GRID = [0.01, 0.02, 0.04, 0.08, 0.16, 0.32, 0.64, 1.28]
SIZE_GRID = [1e3, 1e4, 1e5, 1e6]
CUTOFF = 0.1


def planted_label(d, c, omega, seed) -> float:
    return 1.0 if omega.use_ensemble and c.get(TRAINING_TIME, np.inf) < CUTOFF else 0.0


class CountingLabeler:
    def __init__(self, fn=planted_label):
        self.fn = fn
        self.calls = 0

    def __call__(self, d, c, omega, seed):
        self.calls += 1
        return self.fn(d, c, omega, seed)


def planted_spaces(tree, n_datasets=4) -> MetaSpaces:
    return MetaSpaces(bundled_datasets("train")[:n_datasets], {TRAINING_TIME: TT_GRID, PIPELINE_SIZE: SIZE_GRID},
                      [1.0, 5.0], tree=tree)


def planted_pipeline(spaces, seed, *, cold=20, iterations=60, n_tasks=50, bo_iterations=20):
    """meta-train -> mine -> rank for one matching query; returns (ranked omega, models, pool)."""
    rng = np.random.default_rng(seed)
    meta = cold_start(spaces, cold, planted_label, rng)
    alternating_sample(meta, spaces, planted_label, int(rng.integers(2**31)), iterations=iterations)
    models = train_meta_models(meta, seed=int(rng.integers(2**31)))
    pool = mine_pool(models, spaces, n_tasks, bo_iterations, rng)
    d = spaces.datasets[int(rng.integers(len(spaces.datasets)))]
    query = ConstraintSet({SEARCH_TIME: 5.0, TRAINING_TIME: 0.05})
    return rank_pool(models, pool, d, query), models, pool
