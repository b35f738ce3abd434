"""Greedy forward ensemble selection (with replacement, majority vote)."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from ..clock import Clock, default_clock
from ..constraints import ConstraintEvaluation, ConstraintSet, CustomContext, distance
from ..data import Dataset
from ..learners.metrics import balanced_accuracy, equal_opportunity
from ..learners.pipeline import PipelineMetrics, TrainedPipeline, predict

MAX_MEMBERS = 10
LIBRARY_SIZE = 50


def majority_vote(predictions: np.ndarray, n_classes: int) -> np.ndarray:
    """Column-wise vote over a (members, rows) label matrix; ties go to the lowest class."""
    predictions = np.asarray(predictions, dtype=np.int64)
    if predictions.ndim == 1:
        return predictions.copy()
    counts = np.zeros((n_classes, predictions.shape[1]), dtype=np.int64)
    for row in predictions:
        counts[row, np.arange(len(row))] += 1
    return counts.argmax(axis=0)


@dataclass(frozen=True, eq=False)
class Ensemble:
    """Unweighted vote over ``members``; a pipeline may appear more than once."""

    members: tuple
    n_classes: int

    def distinct(self) -> list[TrainedPipeline]:
        seen, out = set(), []
        for m in self.members:
            if id(m) not in seen:
                seen.add(id(m))
                out.append(m)
        return out

    @property
    def training_time(self) -> float:
        return float(sum(m.training_time for m in self.distinct()))

    @property
    def size_bytes(self) -> int:
        return int(sum(m.size_bytes for m in self.distinct()))

    @property
    def candidate(self):
        return self.members[0].candidate

    def counts(self) -> list[tuple[TrainedPipeline, int]]:
        c = Counter(id(m) for m in self.members)
        return [(m, c[id(m)]) for m in self.distinct()]

    def predict(self, rows, clock: Clock = default_clock) -> tuple[np.ndarray, float]:
        """Voted labels plus summed per-row inference time of the distinct members."""
        by_id, per_row = {}, 0.0
        for m in self.distinct():
            labels, t = predict(m, rows, clock)
            by_id[id(m)] = labels
            per_row += t
        votes = np.stack([by_id[id(m)] for m in self.members])
        return majority_vote(votes, self.n_classes), per_row

    def to_dict(self) -> dict:
        return {"type": "ensemble",
                "members": [{"candidate": m.candidate.as_dict(), "weight": w} for m, w in self.counts()]}


def _aggregate(chosen: Sequence[int], preds: np.ndarray, metrics: Sequence[PipelineMetrics],
               validation: Dataset, n_classes: int) -> tuple[PipelineMetrics, np.ndarray]:
    vote = majority_vote(preds[list(chosen)], n_classes)
    distinct = sorted(set(chosen))
    ba = balanced_accuracy(validation.y, vote)
    eo = 1.0 if validation.sensitive is None else equal_opportunity(validation.y, vote, validation.sensitive)
    return PipelineMetrics(
        ba,
        sum(metrics[i].training_time for i in distinct),
        sum(metrics[i].inference_time_per_instance for i in distinct),
        sum(metrics[i].size_bytes for i in distinct),
        eo,
    ), vote


def greedy_select(preds: np.ndarray, metrics: Sequence[PipelineMetrics], validation: Dataset,
                  n_classes: int, feasible: Callable[[PipelineMetrics, list], bool],
                  max_members: int = MAX_MEMBERS) -> tuple[list[int], list[float]]:
    """Indices chosen (with replacement) and the ensemble BA after each step.

    Each step adds the member that maximizes the voted validation BA among
    additions whose aggregate metrics pass ``feasible``; selection stops
    when nothing strictly improves, or at ``max_members``.
    """
    chosen, bas = [], []
    current = -np.inf
    while len(chosen) < max_members:
        best_i, best_ba = None, current
        for i in range(len(preds)):
            trial = chosen + [i]
            agg, _ = _aggregate(trial, preds, metrics, validation, n_classes)
            if agg.balanced_accuracy > best_ba and feasible(agg, trial):
                best_i, best_ba = i, agg.balanced_accuracy
        if best_i is None:
            break
        chosen.append(best_i)
        bas.append(best_ba)
        current = best_ba
    return chosen, bas


def greedy_ensemble(history, validation: Dataset, constraints: ConstraintSet,
                    max_members: int = MAX_MEMBERS, clock: Clock = default_clock,
                    train: Dataset | None = None):
    """Build a constraint-satisfying ensemble from satisfied records in ``history``.

    Records need ``pipeline``, ``predictions`` (on ``validation``) and
    ``metrics``. Returns ``(ensemble, metrics, evaluation, step_bas)`` or
    ``None`` when no member qualifies or the re-measured ensemble violates
    a constraint.
    """
    library = [h for h in history if h.satisfied and h.pipeline is not None and h.predictions is not None]
    if not library:
        return None
    library.sort(key=lambda h: -h.score)
    library = library[:LIBRARY_SIZE]
    preds = np.stack([h.predictions for h in library])
    metrics = [h.metrics for h in library]
    n_classes = validation.n_classes

    def feasible(agg, trial):
        members = tuple(library[i].pipeline for i in trial)
        ctx = CustomContext(Ensemble(members, n_classes), train, validation)
        return distance(agg, constraints, ctx).satisfied

    chosen, bas = greedy_select(preds, metrics, validation, n_classes, feasible, max_members)
    if not chosen:
        return None
    ens = Ensemble(tuple(library[i].pipeline for i in chosen), n_classes)
    vote, per_row = ens.predict(validation, clock)
    ba = balanced_accuracy(validation.y, vote)
    eo = 1.0 if validation.sensitive is None else equal_opportunity(validation.y, vote, validation.sensitive)
    final = PipelineMetrics(ba, ens.training_time, per_row, ens.size_bytes, eo)
    ev: ConstraintEvaluation = distance(final, constraints, CustomContext(ens, train, validation))
    if not ev.satisfied:
        return None
    return ens, final, ev, bas
