"""Constraint kinds, thresholds, distance to satisfaction and search budgets.

Search constraints (search time, per-candidate evaluation time) are enforced
by the optimizer loop through :class:`SearchBudget`. ML-application
constraints (training/inference time, pipeline size, equal opportunity and
user-registered custom checks) are scored by :func:`distance`.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping, Sequence

import numpy as np

from .clock import Clock, default_clock
from .errors import InvalidInputError, RegistrationError

UPPER = "upper"
LOWER = "lower"


@dataclass(frozen=True)
class ConstraintKind:
    name: str
    direction: str
    key: str
    search: bool = False
    metric: str | None = None  # PipelineMetrics attribute measured by this kind
    predicate: Callable | None = field(default=None, compare=False, repr=False)
    extras: Any = field(default=None, compare=False, repr=False)

    @property
    def custom(self) -> bool:
        return self.predicate is not None


SEARCH_TIME = ConstraintKind("SearchTime", UPPER, "search_time_s", search=True)
EVALUATION_TIME = ConstraintKind("EvaluationTime", UPPER, "evaluation_time_s", search=True)
TRAINING_TIME = ConstraintKind("TrainingTime", UPPER, "training_time_s", metric="training_time")
INFERENCE_TIME = ConstraintKind("InferenceTime", UPPER, "inference_time_s",
                                metric="inference_time_per_instance")
PIPELINE_SIZE = ConstraintKind("PipelineSize", UPPER, "pipeline_size_bytes", metric="size_bytes")
EQUAL_OPPORTUNITY = ConstraintKind("EqualOpportunity", LOWER, "equal_opportunity_min",
                                   metric="equal_opportunity")

BUILTIN_KINDS = (SEARCH_TIME, EVALUATION_TIME, TRAINING_TIME, INFERENCE_TIME, PIPELINE_SIZE,
                 EQUAL_OPPORTUNITY)
APPLICATION_KINDS = (TRAINING_TIME, INFERENCE_TIME, PIPELINE_SIZE, EQUAL_OPPORTUNITY)
# training time and pipeline size only grow with the training set
MONOTONE_KINDS = (TRAINING_TIME, PIPELINE_SIZE)
_BY_KEY = {k.key: k for k in BUILTIN_KINDS}


class ConstraintRegistry:
    """User-defined ML-application constraints, in registration order.

    A custom predicate has the signature
    ``predicate(pipeline, training_time, train, validation, threshold, extras) -> bool``.
    """

    def __init__(self):
        self._kinds: dict[str, ConstraintKind] = {}

    def register_custom(self, name: str, predicate: Callable, extras: Any = None) -> ConstraintKind:
        if name in self._kinds or name in {k.name for k in BUILTIN_KINDS}:
            raise RegistrationError(f"constraint {name!r} is already registered")
        kind = ConstraintKind(name, UPPER, f"custom:{name}", predicate=predicate, extras=extras)
        self._kinds[name] = kind
        return kind

    @property
    def kinds(self) -> tuple[ConstraintKind, ...]:
        return tuple(self._kinds.values())

    def __len__(self) -> int:
        return len(self._kinds)

    def by_key(self, key: str) -> ConstraintKind:
        if key in _BY_KEY:
            return _BY_KEY[key]
        for k in self._kinds.values():
            if k.key == key:
                return k
        raise KeyError(key)


class ConstraintSet:
    """Immutable mapping from constraint kind to threshold."""

    def __init__(self, thresholds: Mapping[ConstraintKind, float]):
        thresholds = {k: float(v) for k, v in thresholds.items()}
        if SEARCH_TIME not in thresholds:
            raise InvalidInputError("a search-time constraint is mandatory")
        for k, t in thresholds.items():
            if not math.isfinite(t):
                raise InvalidInputError(f"{k.name} threshold must be finite")
            if k is EQUAL_OPPORTUNITY or k == EQUAL_OPPORTUNITY:
                if not 0.0 <= t <= 1.0:
                    raise InvalidInputError("equal opportunity threshold must lie in [0, 1]")
            elif not k.custom and t <= 0:
                raise InvalidInputError(f"{k.name} threshold must be positive")
        self._t = thresholds

    def __getitem__(self, kind: ConstraintKind) -> float:
        return self._t[kind]

    def __contains__(self, kind) -> bool:
        return kind in self._t

    def __iter__(self):
        return iter(self._t)

    def __len__(self) -> int:
        return len(self._t)

    def __eq__(self, other) -> bool:
        return isinstance(other, ConstraintSet) and self._t == other._t

    def __hash__(self) -> int:
        return hash(frozenset(self._t.items()))

    def __repr__(self) -> str:
        return f"ConstraintSet({self.to_dict()})"

    def get(self, kind, default=None):
        return self._t.get(kind, default)

    def items(self):
        return self._t.items()

    @property
    def search_time(self) -> float:
        return self._t[SEARCH_TIME]

    def replace(self, **updates) -> "ConstraintSet":
        """Copy with thresholds changed; ``None`` removes a kind. Keys are JSON keys."""
        t = dict(self._t)
        for key, value in updates.items():
            kind = _BY_KEY[key]
            if value is None:
                t.pop(kind, None)
            else:
                t[kind] = value
        return ConstraintSet(t)

    def without(self, kind: ConstraintKind) -> "ConstraintSet":
        return ConstraintSet({k: v for k, v in self._t.items() if k != kind})

    def application_kinds(self) -> list[ConstraintKind]:
        return [k for k in self._t if not k.search]

    def to_dict(self) -> dict:
        return {k.key: v for k, v in self._t.items()}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: Mapping[str, float], registry: ConstraintRegistry | None = None) -> "ConstraintSet":
        t = {}
        for key, value in d.items():
            if value is None:
                continue
            if key in _BY_KEY:
                t[_BY_KEY[key]] = value
            elif registry is not None:
                t[registry.by_key(key)] = value
            else:
                raise InvalidInputError(f"unknown constraint key {key!r}")
        return cls(t)

    @classmethod
    def from_json(cls, text: str, registry: ConstraintRegistry | None = None) -> "ConstraintSet":
        return cls.from_dict(json.loads(text), registry)


@dataclass(frozen=True)
class ConstraintEvaluation:
    delta: dict

    @property
    def total(self) -> float:
        return float(sum(self.delta.values()))

    @property
    def satisfied(self) -> bool:
        return self.total == 0.0

    def to_dict(self) -> dict:
        return {k.key: v for k, v in self.delta.items()}


@dataclass(frozen=True)
class CustomContext:
    """What custom predicates get to see besides the metrics."""

    pipeline: Any
    train: Any
    validation: Any


def _delta(kind: ConstraintKind, measured: float, t: float) -> float:
    if kind.direction == UPPER:
        return max(0.0, (measured - t) / t)
    if t > 0:
        return max(0.0, (t - measured) / t)
    return 1.0 if measured < t else 0.0


def distance(metrics, cset: ConstraintSet, context: CustomContext | None = None) -> ConstraintEvaluation:
    """Relative hinge distance to each ML-application threshold.

    Upper bounds give ``max(0, (m - t) / t)``, lower bounds
    ``max(0, (t - m) / t)``; custom checks give 0 (pass) or 1 (fail).
    """
    delta = {}
    for kind, t in cset.items():
        if kind.search:
            continue
        if kind.custom:
            if context is None:
                raise InvalidInputError(f"custom constraint {kind.name!r} needs a pipeline context")
            ok = kind.predicate(context.pipeline, metrics.training_time, context.train,
                                context.validation, t, kind.extras)
            delta[kind] = 0.0 if ok else 1.0
        else:
            delta[kind] = _delta(kind, float(getattr(metrics, kind.metric)), t)
    return ConstraintEvaluation(delta)


@dataclass(frozen=True)
class SearchBudget:
    start: float
    search_time_limit: float
    evaluation_time_limit: float | None = None

    def __post_init__(self):
        if self.search_time_limit <= 0:
            raise InvalidInputError("search time limit must be positive")
        if self.evaluation_time_limit is not None and self.evaluation_time_limit <= 0:
            raise InvalidInputError("evaluation time limit must be positive")

    def remaining(self, now: float) -> float:
        return self.search_time_limit - (now - self.start)


def budget_init(limits, clock: Clock = default_clock) -> SearchBudget:
    """Start measuring; ``limits`` is a ConstraintSet or a (search, evaluation) pair."""
    if isinstance(limits, ConstraintSet):
        search, evaluation = limits.search_time, limits.get(EVALUATION_TIME)
    elif isinstance(limits, (tuple, list)):
        search, evaluation = limits[0], (limits[1] if len(limits) > 1 else None)
    else:
        search, evaluation = float(limits), None
    return SearchBudget(clock(), float(search), None if evaluation is None else float(evaluation))


def budget_exceeded(budget: SearchBudget, now: float) -> bool:
    return now - budget.start >= budget.search_time_limit


# Threshold derivation ---------------------------------------------------------

def derive_thresholds(samples: Mapping[ConstraintKind, Sequence[float]],
                      percentiles: Sequence[float]) -> dict[ConstraintKind, list[float]]:
    """Empirical percentiles (linear interpolation) of observed metric values.

    Equal opportunity is handled through ``1 - EO`` so that a low percentile
    always yields the tightest threshold for every kind.
    """
    out = {}
    for kind, values in samples.items():
        values = np.asarray(list(values), dtype=np.float64)
        if values.size == 0:
            raise InvalidInputError(f"no samples for {kind.name}")
        if kind.direction == LOWER:
            out[kind] = [float(1.0 - np.percentile(1.0 - values, p)) for p in percentiles]
        else:
            out[kind] = [float(np.percentile(values, p)) for p in percentiles]
    return out


def threshold_rows(thresholds: Mapping[ConstraintKind, Sequence[float]],
                   percentiles: Sequence[float]) -> list[dict]:
    """One JSON-ready row per percentile."""
    rows = []
    for i, p in enumerate(percentiles):
        row = {"percentile": p}
        row.update({k.key: v[i] for k, v in thresholds.items()})
        rows.append(row)
    return rows


def constraint_sets_from_thresholds(thresholds: Mapping[ConstraintKind, Sequence[float]],
                                    search_time: float) -> list[ConstraintSet]:
    """Single-constraint candidate sets, one per (kind, threshold)."""
    return [ConstraintSet({SEARCH_TIME: search_time, kind: t})
            for kind, ts in thresholds.items() for t in ts]
