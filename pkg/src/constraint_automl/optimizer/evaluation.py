"""Candidate evaluation, optionally on a doubling ladder of training-set sizes."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
import numpy as np

from ..clock import Clock, default_clock
from ..constraints import (MONOTONE_KINDS, ConstraintEvaluation, ConstraintSet, CustomContext,
                           SearchBudget, budget_exceeded, distance)
from ..data import Dataset
from ..learners.pipeline import PipelineMetrics, TrainedPipeline, evaluate, fit
from ..search_space import PipelineCandidate
from .objective import constrained_objective

BASE_PER_CLASS = 10


@dataclass
class EvaluationRecord:
    candidate: PipelineCandidate
    fidelity: int
    metrics: PipelineMetrics | None
    evaluation: ConstraintEvaluation | None
    score: float
    wall_time: float
    rungs: list = field(default_factory=list)  # (fidelity, score) per completed rung
    pruned: str | None = None  # "median", "monotone" or None
    timeout: bool = False
    round: int = 0
    elapsed: float = 0.0  # since search start, at completion
    pipeline: TrainedPipeline | None = field(default=None, repr=False)
    predictions: np.ndarray | None = field(default=None, repr=False)
    features: np.ndarray | None = field(default=None, repr=False)  # surrogate encoding

    @property
    def satisfied(self) -> bool:
        return self.evaluation is not None and self.evaluation.satisfied

    def to_dict(self, include_candidate: bool = True) -> dict:
        d = {
            "fidelity": self.fidelity,
            "score": self.score if math.isfinite(self.score) else None,
            "wall_time_s": self.wall_time,
            "elapsed_s": self.elapsed,
            "satisfied": self.satisfied,
            "pruned": self.pruned,
            "timeout": self.timeout,
            "round": self.round,
            "rungs": [[f, s] for f, s in self.rungs],
            "metrics": None if self.metrics is None else self.metrics.to_dict(),
            "deltas": None if self.evaluation is None else self.evaluation.to_dict(),
        }
        if include_candidate:
            d["candidate"] = self.candidate.as_dict()
        return d


class RungLog:
    """Scores of all completed rungs seen so far, for median pruning."""

    def __init__(self):
        self.fidelities: list[int] = []
        self.scores: list[float] = []

    def add(self, fidelity: int, score: float) -> None:
        self.fidelities.append(fidelity)
        self.scores.append(score)

    def median_at(self, fidelity: int) -> float | None:
        """Median score over rungs at this fidelity or lower; None when there are none."""
        vals = [s for f, s in zip(self.fidelities, self.scores) if f <= fidelity]
        return float(np.median(vals)) if vals else None


def fidelity_ladder(n_train: int, n_classes: int, incremental: bool = True) -> list[int]:
    """Training-set sizes 10C, 20C, 40C, ... capped at (and ending with) ``n_train``."""
    if not incremental:
        return [n_train]
    ladder, size = [], BASE_PER_CLASS * n_classes
    while size < n_train:
        ladder.append(size)
        size *= 2
    ladder.append(n_train)
    return ladder


def nested_order(y: np.ndarray, n_classes: int, rng: np.random.Generator) -> np.ndarray:
    """Row order whose every prefix is as class-balanced as possible.

    Classes are shuffled internally and then interleaved round-robin, so the
    first 10C rows hold 10 rows of each class whenever available.
    """
    pools = [list(np.flatnonzero(y == c)[rng.permutation(int(np.sum(y == c)))]) for c in range(n_classes)]
    out = []
    depth = max((len(p) for p in pools), default=0)
    for i in range(depth):
        for p in pools:
            if i < len(p):
                out.append(p[i])
    return np.asarray(out, dtype=np.int64)


def incremental_fit_eval(candidate: PipelineCandidate, train: Dataset, validation: Dataset,
                         budget: SearchBudget, rung_log: RungLog | None, constraints: ConstraintSet,
                         *, incremental: bool = True, seed: int = 0, clock: Clock = default_clock,
                         round: int = 0) -> EvaluationRecord:
    """Evaluate ``candidate``, growing the training set rung by rung.

    After every rung the candidate is dropped when a monotone constraint
    (training time, pipeline size) is already violated, or when its score is
    below the median of earlier candidates' rungs at comparable-or-lower fidelity. A rung
    that overruns the evaluation-time limit is discarded and the record keeps
    the last completed rung with ``timeout`` set.
    """
    rng = np.random.default_rng(seed)
    order = nested_order(train.y, train.n_classes, rng)
    ladder = fidelity_ladder(len(train), train.n_classes, incremental)
    eval_start = clock()
    record = EvaluationRecord(candidate, 0, None, None, -math.inf, 0.0, round=round)
    log = rung_log if rung_log is not None else RungLog()
    for i, size in enumerate(ladder):
        if budget_exceeded(budget, clock()):
            record.timeout = True
            break
        subset = train.subset(order[:size]) if size < len(train) else train
        tp = fit(candidate, subset, seed=seed, clock=clock)
        metrics, pred = evaluate(tp, validation, clock=clock)
        if budget.evaluation_time_limit is not None and clock() - eval_start > budget.evaluation_time_limit:
            record.timeout = True
            break
        ev = distance(metrics, constraints, CustomContext(tp, subset, validation))
        score = constrained_objective(ev, metrics.balanced_accuracy)
        record.fidelity, record.metrics, record.evaluation, record.score = size, metrics, ev, score
        record.pipeline, record.predictions = tp, pred
        record.rungs.append((size, score))
        median = log.median_at(size)
        if i == len(ladder) - 1:
            break
        if any(ev.delta.get(k, 0.0) > 0 for k in MONOTONE_KINDS):
            record.pruned = "monotone"
            break
        if median is not None and score < median:
            record.pruned = "median"
            break
    # published only now, so a candidate is never pruned against its own rungs
    for size, score in record.rungs:
        log.add(size, score)
    record.wall_time = max(0.0, clock() - eval_start)
    return record
