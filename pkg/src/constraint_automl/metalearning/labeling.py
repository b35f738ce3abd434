"""Meta-target labels: how often a configuration beats the default one."""
from __future__ import annotations

import math
from typing import Callable, Sequence

import numpy as np

from ..clock import Clock, default_clock
from ..constraints import ConstraintSet
from ..data import Dataset
from ..optimizer.config import AutoMLConfiguration
from ..optimizer.search import run_search
from ..search_space import ActivationMask, SearchSpaceTree, build_default_space

DEFAULT_HOLDOUT = 0.33
DEFAULT_N_RUNS = 3


def default_configuration(tree: SearchSpaceTree | None = None) -> AutoMLConfiguration:
    """Full space, one-third hold-out, ensembling and incremental training on, no reshuffling."""
    tree = tree or build_default_space()
    return AutoMLConfiguration(ActivationMask.all(tree), DEFAULT_HOLDOUT, use_ensemble=True,
                               use_incremental=True, reshuffle_validation=False)


def label_run(d: Dataset, c: ConstraintSet, omega: AutoMLConfiguration, n_runs: int = DEFAULT_N_RUNS,
              seeds: Sequence[int] | None = None, *, runner: Callable = run_search,
              default: AutoMLConfiguration | None = None, **search_kwargs) -> float:
    """Fraction of paired runs in which ``omega`` strictly beats the default configuration.

    Run i of both configurations shares ``seeds[i]``. A run without a
    satisfying pipeline scores -inf, so ties (including both failing) are
    not wins. When no ``omega`` run satisfies the constraints the label is 0
    and the default configuration is never run.
    """
    if n_runs < 1:
        raise ValueError("n_runs must be >= 1")
    seeds = list(range(n_runs)) if seeds is None else list(seeds)
    if len(seeds) != n_runs:
        raise ValueError("need one seed per run")
    ours = [runner(d, omega, c, s, **search_kwargs).best_ba for s in seeds]
    if not any(math.isfinite(b) for b in ours):
        return 0.0
    default = default or default_configuration(search_kwargs.get("tree"))
    theirs = [runner(d, default, c, s, **search_kwargs).best_ba for s in seeds]
    return sum(a > b for a, b in zip(ours, theirs)) / n_runs


class SearchLabeler:
    """Labels triples with :func:`label_run`; the callable used by the samplers."""

    def __init__(self, n_runs: int = DEFAULT_N_RUNS, *, clock: Clock = default_clock,
                 tree: SearchSpaceTree | None = None, max_evaluations: int | None = None,
                 runner: Callable = run_search):
        self.n_runs = n_runs
        self.clock = clock
        self.tree = tree or build_default_space()
        self.max_evaluations = max_evaluations
        self.runner = runner

    def __call__(self, d: Dataset, c: ConstraintSet, omega: AutoMLConfiguration, seed: int) -> float:
        seeds = [int(s) for s in np.random.SeedSequence(seed).generate_state(self.n_runs)]
        return label_run(d, c, omega, self.n_runs, seeds, runner=self.runner, clock=self.clock,
                         tree=self.tree, max_evaluations=self.max_evaluations)
