"""Offline configuration mining and online ranking."""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from ..constraints import SEARCH_TIME, ConstraintRegistry, ConstraintSet
from ..data import Dataset
from ..errors import DataFormatError, EmptyPoolError, InvalidInputError
from ..learners.forest import forest_predict
from ..metafeatures import CalibrationCurve, calibrate, constraint_features, dataset_features, omega_features
from ..optimizer.config import AutoMLConfiguration
from ..optimizer.proposal import N_RANDOM_INIT, smbo_maximize
from ..search_space import SearchSpaceTree, is_normalized
from .labeling import default_configuration
from .models import MetaModels
from .sampling import MetaSpaces

# ranking probability above which a mined entry is predicted to beat the default
WIN_PROBABILITY = 0.5


@dataclass(frozen=True)
class PoolEntry:
    omega: AutoMLConfiguration
    dataset: str
    constraints: dict
    predicted: float


class ConfigPool:
    """Mined configurations with the task they were mined for."""

    def __init__(self, entries=()):
        self.entries = list(entries)
        self._matrix = None

    def __len__(self) -> int:
        return len(self.entries)

    def __getitem__(self, i) -> PoolEntry:
        return self.entries[i]

    def omegas(self) -> list[AutoMLConfiguration]:
        return [e.omega for e in self.entries]

    def omega_matrix(self) -> np.ndarray:
        if self._matrix is None or len(self._matrix) != len(self.entries):
            self._matrix = np.stack([omega_features(e.omega) for e in self.entries])
        return self._matrix

    def to_dict(self, tree: SearchSpaceTree | None = None) -> dict:
        return {"entries": [{"omega": e.omega.to_dict(tree), "dataset": e.dataset, "constraints": e.constraints,
                             "predicted_win_fraction": e.predicted} for e in self.entries]}

    def save(self, path, tree: SearchSpaceTree | None = None) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(tree), fh, indent=1)

    @classmethod
    def from_dict(cls, d: dict) -> "ConfigPool":
        return cls(PoolEntry(AutoMLConfiguration.from_dict(e["omega"]), e["dataset"], e["constraints"],
                             float(e["predicted_win_fraction"])) for e in d["entries"])

    @classmethod
    def load(cls, path) -> "ConfigPool":
        try:
            with open(path, encoding="utf-8") as fh:
                return cls.from_dict(json.load(fh))
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise DataFormatError(f"{path}: bad pool file ({exc})") from None


def mine_pool(models: MetaModels, spaces: MetaSpaces, n_tasks: int, bo_iterations: int, rng,
              n_random_init: int = N_RANDOM_INIT) -> ConfigPool:
    """For each of ``n_tasks`` random (dataset, constraints), keep the configuration
    maximizing the predicted win fraction found by SMBO with the task features frozen."""
    rng = np.random.default_rng(rng)
    pool = ConfigPool()
    for _ in range(n_tasks):
        d, c = spaces.sample_task(rng)
        head = np.concatenate([spaces.dataset_vector(d), constraint_features(c, spaces.registry)])

        def objective(omega, head=head):
            return float(forest_predict(models.regression, np.concatenate([head, omega_features(omega)])[None])[0])

        best, value, _ = smbo_maximize(spaces.sample_omega, omega_features, objective, bo_iterations, rng,
                                       n_random_init=min(n_random_init, bo_iterations))
        assert is_normalized(spaces.tree, best.mask)
        pool.entries.append(PoolEntry(best, spaces.datasets[d].name, c.to_dict(), value))
    return pool


def _query_head(d, c, registry) -> np.ndarray:
    df = d if isinstance(d, np.ndarray) else dataset_features(d)
    cf = c if isinstance(c, np.ndarray) else constraint_features(c, registry)
    return np.concatenate([df, cf])


def rank_scores(models: MetaModels, pool: ConfigPool, d: Dataset, c: ConstraintSet,
                registry: ConstraintRegistry | None = None) -> np.ndarray:
    """Predicted probability of beating the default, for every pool entry."""
    if len(pool) == 0:
        raise EmptyPoolError("the configuration pool is empty")
    om = pool.omega_matrix()
    head = _query_head(d, c, registry)
    if len(head) + om.shape[1] != models.n_features:
        raise InvalidInputError(f"query has {len(head) + om.shape[1]} features, models expect {models.n_features}")
    X = np.empty((len(om), models.n_features))
    X[:, :len(head)] = head
    X[:, len(head):] = om
    return forest_predict(models.classification, X)


def rank_pool(models: MetaModels, pool: ConfigPool, d: Dataset, c: ConstraintSet,
              registry: ConstraintRegistry | None = None) -> AutoMLConfiguration:
    """Pool entry with the highest win probability (lowest index on ties)."""
    return pool[int(np.argmax(rank_scores(models, pool, d, c, registry)))].omega


def query_constraints(c: ConstraintSet, curves: tuple[CalibrationCurve, CalibrationCurve] | None) -> ConstraintSet:
    """Constraints as seen by the meta-models: search time mapped to the meta-training machine."""
    if curves is None:
        return c
    source, target = curves
    return c.replace(**{SEARCH_TIME.key: calibrate(source, target, c.search_time)})


def dynamic_configure(models: MetaModels, pool: ConfigPool, d: Dataset, c: ConstraintSet,
                      registry: ConstraintRegistry | None = None,
                      curves: tuple[CalibrationCurve, CalibrationCurve] | None = None, *,
                      conservative: bool = True, tree: SearchSpaceTree | None = None) -> AutoMLConfiguration:
    """The configuration to search with on this (dataset, constraints).

    ``curves`` is (source, target): the meta-training machine's and this
    machine's calibration curves. Only the query's search-time feature is
    remapped; the search itself keeps the user's budget.

    With ``conservative`` the top-ranked entry replaces the default
    configuration only when the ranking model predicts it beats the default
    (win probability above one half).
    """
    scores = rank_scores(models, pool, d, query_constraints(c, curves), registry)
    best = int(np.argmax(scores))
    if conservative and scores[best] <= WIN_PROBABILITY:
        return default_configuration(tree)
    return pool[best].omega
