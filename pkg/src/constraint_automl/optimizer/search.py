"""The constrained pipeline search for one fixed AutoML configuration."""
from __future__ import annotations

import heapq
import json
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from ..clock import Clock, default_clock
from ..constraints import (EQUAL_OPPORTUNITY, INFERENCE_TIME, PIPELINE_SIZE, TRAINING_TIME,
                           ConstraintEvaluation, ConstraintSet, CustomContext, budget_exceeded,
                           budget_init, distance)
from ..data import Dataset
from ..learners.pipeline import PipelineMetrics, evaluate, fit
from ..search_space import ActivationMask, SearchSpaceTree, build_default_space, sample_candidate
from .config import AutoMLConfiguration
from .ensemble import LIBRARY_SIZE, MAX_MEMBERS, greedy_ensemble
from .evaluation import EvaluationRecord, RungLog, incremental_fit_eval
from .objective import constrained_objective, split
from .proposal import propose_next


@dataclass
class SearchResult:
    best: object | None  # TrainedPipeline or Ensemble
    metrics: PipelineMetrics | None
    evaluation: ConstraintEvaluation | None
    history: list[EvaluationRecord]
    satisfied: bool
    trace: list[tuple[float, float]] = field(default_factory=list)  # (elapsed, best-so-far BA)
    ensemble_steps: list[float] = field(default_factory=list)
    elapsed: float = 0.0

    @property
    def best_ba(self) -> float:
        """Validation BA of the returned pipeline, or -inf when there is none."""
        return self.metrics.balanced_accuracy if self.satisfied else -math.inf

    def to_dict(self) -> dict:
        if self.best is None:
            best = None
        elif hasattr(self.best, "members"):
            best = self.best.to_dict()
        else:
            best = {"type": "pipeline", "candidate": self.best.candidate.as_dict()}
        return {
            "satisfied": self.satisfied,
            "best": best,
            "metrics": None if self.metrics is None else self.metrics.to_dict(),
            "deltas": None if self.evaluation is None else self.evaluation.to_dict(),
            "n_evaluations": len(self.history),
            "elapsed_s": self.elapsed,
            "ensemble_step_bas": self.ensemble_steps,
            "trace": [[t, b] for t, b in self.trace],
            "history": [h.to_dict() for h in self.history],
        }

    def to_json(self, indent: int | None = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent)


class _Library:
    """The top-scoring satisfied records keep their fitted pipelines; others drop them."""

    def __init__(self, size: int):
        self.size = size
        self._heap: list = []

    def offer(self, idx: int, rec: EvaluationRecord) -> None:
        if not rec.satisfied:
            rec.pipeline = rec.predictions = None
            return
        item = (rec.score, -idx, rec)
        if len(self._heap) < self.size:
            heapq.heappush(self._heap, item)
        else:
            dropped = heapq.heappushpop(self._heap, item)[2]
            dropped.pipeline = dropped.predictions = None

    def records(self) -> list[EvaluationRecord]:
        return [r for _, _, r in sorted(self._heap, key=lambda t: (-t[0], -t[1]))]


def run_search(dataset: Dataset, omega: AutoMLConfiguration, constraints: ConstraintSet, seed: int = 0,
               *, clock: Clock = default_clock, tree: SearchSpaceTree | None = None,
               max_evaluations: int | None = None, max_members: int = MAX_MEMBERS) -> SearchResult:
    """Propose, evaluate and record candidates until the search budget runs out.

    The returned best is the highest-scoring satisfied record, replaced by
    the greedy ensemble when ensembling is on and yields more than one
    distinct member. ``max_evaluations`` optionally caps the loop as well.
    """
    tree = tree or build_default_space()
    omega.check(tree)
    rng = np.random.default_rng([int(seed), 1])
    budget = budget_init(constraints, clock)
    base_train, base_val = split(dataset, omega.holdout_fraction, seed)
    history: list[EvaluationRecord] = []
    library = _Library(LIBRARY_SIZE)
    rungs = RungLog()
    trace, best_so_far = [], -math.inf
    best_idx = None
    while not budget_exceeded(budget, clock()):
        if max_evaluations is not None and len(history) >= max_evaluations:
            break
        r = len(history)
        if omega.reshuffle_validation:
            train, val = split(dataset, omega.holdout_fraction, seed, r, True)
        else:
            train, val = base_train, base_val
        cand = propose_next(history, tree, omega.mask, rng)
        rec = incremental_fit_eval(cand, train, val, budget, rungs, constraints,
                                   incremental=omega.use_incremental, seed=int(rng.integers(2**31)),
                                   clock=clock, round=r)
        rec.elapsed = clock() - budget.start
        history.append(rec)
        if rec.satisfied and (best_idx is None or rec.score > history[best_idx].score):
            best_idx = r
        library.offer(r, rec)
        if rec.satisfied:
            best_so_far = max(best_so_far, rec.metrics.balanced_accuracy)
        trace.append((rec.elapsed, best_so_far))
    elapsed = clock() - budget.start
    if best_idx is None:
        return SearchResult(None, None, None, history, False, trace, elapsed=elapsed)

    best_rec = history[best_idx]
    best, metrics, ev = best_rec.pipeline, best_rec.metrics, best_rec.evaluation
    steps: list[float] = []
    if omega.use_ensemble:
        lib = library.records()
        if omega.reshuffle_validation:
            # members were validated on different splits; compare them on the round-0 split
            remeasured = []
            for rec in lib:
                m, p = evaluate(rec.pipeline, base_val, clock)
                e = distance(m, constraints, CustomContext(rec.pipeline, base_train, base_val))
                remeasured.append(replace(rec, metrics=m, predictions=p, evaluation=e,
                                          score=constrained_objective(e, m.balanced_accuracy)))
            lib = remeasured
        out = greedy_ensemble(lib, base_val, constraints, max_members, clock, base_train)
        if out is not None:
            ens, e_metrics, e_ev, steps = out
            if len(ens.distinct()) > 1 or ens.members[0] is not best:
                if not omega.reshuffle_validation or e_metrics.balanced_accuracy >= metrics.balanced_accuracy:
                    best, metrics, ev = ens, e_metrics, e_ev
    # pipelines of records outside the library are gone; release the library too
    for rec in history:
        rec.pipeline = rec.predictions = None
    return SearchResult(best, metrics, ev, history, True, trace, steps, elapsed)


def random_run_samples(datasets: Sequence[Dataset], n: int, seed: int = 0, *,
                       tree: SearchSpaceTree | None = None, clock: Clock = default_clock) -> list[dict]:
    """Metric observations of ``n`` random pipelines on random datasets.

    Each row holds the dataset name plus the constraint metrics (JSON keys)
    of one random candidate trained and validated on a 67/33 split; equal
    opportunity is ``None`` on datasets without a sensitive attribute.
    """
    tree = tree or build_default_space()
    rng = np.random.default_rng([int(seed), 2])
    mask = ActivationMask.all(tree)
    rows = []
    for _ in range(n):
        d = datasets[int(rng.integers(len(datasets)))]
        train, val = split(d, 0.33, int(rng.integers(2**31)))
        cand = sample_candidate(tree, mask, rng)
        tp = fit(cand, train, seed=int(rng.integers(2**31)), clock=clock)
        m, _ = evaluate(tp, val, clock)
        row = {"dataset": d.name}
        row.update(m.to_dict())
        row.pop("balanced_accuracy")
        if d.sensitive is None:
            row["equal_opportunity"] = None  # undefined without a sensitive attribute
        rows.append(row)
    return rows


# column of random_run_samples rows observed for each application kind
SAMPLE_COLUMNS = {TRAINING_TIME: "training_time_s", INFERENCE_TIME: "inference_time_s",
                  PIPELINE_SIZE: "pipeline_size_bytes", EQUAL_OPPORTUNITY: "equal_opportunity"}
