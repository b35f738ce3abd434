"""Meta-feature vectors for (dataset, constraints, configuration) and search-time calibration."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .clock import Clock, default_clock
from .constraints import (EQUAL_OPPORTUNITY, INFERENCE_TIME, PIPELINE_SIZE, SEARCH_TIME, TRAINING_TIME,
                          ConstraintRegistry, ConstraintSet)
from .data import Dataset
from .errors import DataFormatError, InvalidInputError
from .search_space import mask_to_features

UPPER_SENTINEL = 1e12
EO_SENTINEL = 0.0
N_DATASET_FEATURES = 12
CONSTRAINT_SLOTS = (SEARCH_TIME, TRAINING_TIME, INFERENCE_TIME, PIPELINE_SIZE, EQUAL_OPPORTUNITY)
N_OMEGA_SCALARS = 4

DATASET_FEATURE_NAMES = (
    "n_instances", "log_n_instances", "n_features", "log_n_features", "n_classes", "class_entropy",
    "class_prob_min", "class_prob_max", "class_prob_mean", "class_prob_std", "dataset_ratio",
    "ratio_nominal_numerical",
)


def dataset_features(d: Dataset) -> np.ndarray:
    if len(d) == 0:
        raise InvalidInputError("dataset is empty")
    n, f = len(d), d.n_features
    p = d.class_counts() / n
    nz = p[p > 0]
    n_nom = int(np.sum(d.nominal))
    n_num = f - n_nom
    return np.array([
        n, math.log(n), f, math.log(f) if f > 0 else 0.0, d.n_classes,
        float(-np.sum(nz * np.log(nz))),
        p.min(), p.max(), p.mean(), p.std(),
        f / n,
        n_nom / n_num if n_num else float(n_nom),
    ], dtype=np.float64)


def constraint_slots(registry: ConstraintRegistry | None = None) -> tuple:
    return CONSTRAINT_SLOTS + (registry.kinds if registry is not None else ())


def constraint_features(c: ConstraintSet, registry: ConstraintRegistry | None = None) -> np.ndarray:
    """Thresholds in slot order; absent upper bounds give 1e12, absent equal opportunity 0."""
    out = []
    for kind in constraint_slots(registry):
        default = EO_SENTINEL if kind == EQUAL_OPPORTUNITY else UPPER_SENTINEL
        out.append(c.get(kind, default))
    return np.asarray(out, dtype=np.float64)


def omega_features(omega) -> np.ndarray:
    return np.concatenate([np.asarray(omega.scalars(), dtype=np.float64), mask_to_features(omega.mask)])


def encode(d: Dataset | np.ndarray, c: ConstraintSet | np.ndarray, omega,
           registry: ConstraintRegistry | None = None) -> np.ndarray:
    """Dataset block ++ constraint block ++ configuration block.

    ``d`` and ``c`` may be passed pre-encoded, which keeps ranking and
    mining from recomputing the frozen parts of the query.
    """
    df = d if isinstance(d, np.ndarray) else dataset_features(d)
    cf = c if isinstance(c, np.ndarray) else constraint_features(c, registry)
    return np.concatenate([df, cf, omega_features(omega)])


def encode_many(d, c, omegas: Sequence, registry: ConstraintRegistry | None = None) -> np.ndarray:
    """Rows of :func:`encode` for many configurations sharing one (d, c)."""
    df = d if isinstance(d, np.ndarray) else dataset_features(d)
    cf = c if isinstance(c, np.ndarray) else constraint_features(c, registry)
    if len(omegas) == 0:
        return np.empty((0, len(df) + len(cf)), dtype=np.float64)
    om = np.stack([omega_features(o) for o in omegas])
    head = np.broadcast_to(np.concatenate([df, cf]), (len(om), len(df) + len(cf)))
    return np.hstack([head, om])


def vector_length(n_nodes: int, registry: ConstraintRegistry | None = None) -> int:
    return N_DATASET_FEATURES + len(constraint_slots(registry)) + N_OMEGA_SCALARS + n_nodes


# Calibration -------------------------------------------------------------------

@dataclass(frozen=True)
class CalibrationCurve:
    """Best validation BA reached by each search time (step function)."""

    times: np.ndarray
    bas: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=np.float64)
        b = np.asarray(self.bas, dtype=np.float64)
        if t.ndim != 1 or t.shape != b.shape or len(t) == 0:
            raise InvalidInputError("curve needs equally long, nonempty time and BA arrays")
        if np.any(np.diff(t) <= 0):
            raise InvalidInputError("curve times must be strictly increasing")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "bas", b)

    def __len__(self) -> int:
        return len(self.times)

    def ba_at(self, t: float) -> float:
        """Step interpolation: BA of the last point at or before ``t`` (0 before the first)."""
        i = int(np.searchsorted(self.times, t, side="right")) - 1
        return float(self.bas[i]) if i >= 0 else 0.0

    def envelope(self) -> "CalibrationCurve":
        return CalibrationCurve(self.times, np.maximum.accumulate(self.bas))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["time_s", "balanced_accuracy"])
            for t, b in zip(self.times, self.bas):
                w.writerow([repr(float(t)), repr(float(b))])

    @classmethod
    def from_csv(cls, path) -> "CalibrationCurve":
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.DictReader(fh))
        try:
            t = [float(r["time_s"]) for r in rows]
            b = [float(r["balanced_accuracy"]) for r in rows]
        except (KeyError, ValueError) as exc:
            raise DataFormatError(f"bad calibration curve {path}: {exc}") from None
        return cls(np.array(t), np.array(b))


def average_traces(traces: Sequence[Sequence[tuple[float, float]]]) -> CalibrationCurve:
    """Pointwise mean of step traces on the union of their times, then the monotone envelope."""
    grid = np.unique(np.concatenate([np.asarray([t for t, _ in tr], dtype=np.float64)
                                     for tr in traces if len(tr)] or [np.zeros(0)]))
    if len(grid) == 0:
        raise InvalidInputError("no trace points to average")
    cols = []
    for tr in traces:
        t = np.asarray([p[0] for p in tr], dtype=np.float64)
        b = np.asarray([p[1] for p in tr], dtype=np.float64)
        b = np.where(np.isfinite(b), b, 0.0)
        idx = np.searchsorted(t, grid, side="right") - 1
        cols.append(np.where(idx >= 0, b[np.maximum(idx, 0)], 0.0) if len(t) else np.zeros(len(grid)))
    return CalibrationCurve(grid, np.mean(cols, axis=0)).envelope()


def build_curve(datasets: Dataset | Sequence[Dataset], omega, max_time: float, repetitions: int = 1,
                seed: int = 0, *, clock: Clock = default_clock) -> CalibrationCurve:
    """Run the static search ``repetitions`` times per dataset and average the best-so-far traces."""
    from .optimizer.search import run_search

    if max_time <= 0:
        raise InvalidInputError("max_time must be positive")
    if isinstance(datasets, Dataset):
        datasets = [datasets]
    traces = []
    for di, d in enumerate(datasets):
        for r in range(repetitions):
            res = run_search(d, omega, ConstraintSet({SEARCH_TIME: max_time}),
                             seed=int(np.random.SeedSequence([seed, di, r]).generate_state(1)[0]),
                             clock=clock)
            traces.append(res.trace)
    return average_traces(traces)


def calibrate(source: CalibrationCurve, target: CalibrationCurve, t_target: float) -> float:
    """Source-machine search time that reaches the BA the target machine has at ``t_target``."""
    b = target.ba_at(t_target)
    hit = np.flatnonzero(source.bas >= b)
    return float(source.times[hit[0]]) if len(hit) else float(source.times[-1])
