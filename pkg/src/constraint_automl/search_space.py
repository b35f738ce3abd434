"""Tree-structured ML hyperparameter space and activation masks.

The space is a forest of component roots (encoding, imputation, scaling,
sampling, class weighting, classifier). Each root is a categorical choice
between strategies; each strategy is a boolean child node, and strategy
hyperparameters hang below their strategy node. An :class:`ActivationMask`
marks which nodes the optimizer tunes; inactive nodes stay at their default.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from typing import Any, Iterable, Sequence

import numpy as np

from .errors import InvalidMaskError

SPACE_VERSION = "1"

CATEGORICAL = "categorical"
NUMERIC = "numeric"
BOOLEAN = "boolean"


@dataclass(frozen=True)
class HyperparameterNode:
    id: int
    name: str
    kind: str
    default: Any
    parent: int | None = None
    depth: int = 0
    choices: tuple = ()
    lo: float | None = None
    hi: float | None = None
    log: bool = False
    integer: bool = False

    def __post_init__(self):
        if self.kind == CATEGORICAL:
            if not self.choices:
                raise ValueError(f"{self.name}: categorical node needs choices")
            if self.default not in self.choices:
                raise ValueError(f"{self.name}: default {self.default!r} not in choices")
        elif self.kind == NUMERIC:
            if self.lo is None or self.hi is None or not self.lo < self.hi:
                raise ValueError(f"{self.name}: numeric node needs lo < hi")
            if self.log and self.lo <= 0:
                raise ValueError(f"{self.name}: log-scale range must be positive")
            if not self.lo <= self.default <= self.hi:
                raise ValueError(f"{self.name}: default outside [lo, hi]")
        elif self.kind == BOOLEAN:
            if not isinstance(self.default, bool):
                raise ValueError(f"{self.name}: boolean default must be bool")
        else:
            raise ValueError(f"unknown node kind {self.kind!r}")
        if self.parent is not None and self.parent >= self.id:
            raise ValueError(f"{self.name}: parent id must precede node id")

    def is_legal(self, value) -> bool:
        if self.kind == CATEGORICAL:
            return value in self.choices
        if self.kind == BOOLEAN:
            return isinstance(value, (bool, np.bool_))
        if self.integer and value != int(value):
            return False
        return self.lo <= value <= self.hi

    def sample(self, rng: np.random.Generator):
        if self.kind == CATEGORICAL:
            return self.choices[int(rng.integers(len(self.choices)))]
        if self.kind == BOOLEAN:
            return bool(rng.integers(2))
        if self.log:
            lo, hi = math.log(self.lo), math.log(self.hi)
            if self.integer:
                lo, hi = math.log(self.lo - 0.5 if self.lo > 0.5 else self.lo), math.log(self.hi + 0.5)
            value = math.exp(rng.uniform(lo, hi))
        else:
            lo, hi = self.lo, self.hi
            if self.integer:
                lo, hi = lo - 0.5, hi + 0.5
            value = rng.uniform(lo, hi)
        if self.integer:
            return int(min(max(round(value), self.lo), self.hi))
        return float(min(max(value, self.lo), self.hi))

    def normalize_value(self, value) -> float:
        """Map a legal value into [0, 1] for surrogate features."""
        if self.kind == BOOLEAN:
            return float(bool(value))
        if self.kind == CATEGORICAL:
            if len(self.choices) == 1:
                return 0.0
            return self.choices.index(value) / (len(self.choices) - 1)
        if self.log:
            return (math.log(value) - math.log(self.lo)) / (math.log(self.hi) - math.log(self.lo))
        return (value - self.lo) / (self.hi - self.lo)

    def to_dict(self) -> dict:
        d = {"id": self.id, "name": self.name, "kind": self.kind,
             "default": self.default, "parent": self.parent, "depth": self.depth}
        if self.kind == CATEGORICAL:
            d["choices"] = list(self.choices)
        elif self.kind == NUMERIC:
            d.update(lo=self.lo, hi=self.hi, log=self.log, integer=self.integer)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "HyperparameterNode":
        return cls(id=d["id"], name=d["name"], kind=d["kind"], default=d["default"],
                   parent=d.get("parent"), depth=d.get("depth", 0),
                   choices=tuple(d.get("choices", ())), lo=d.get("lo"), hi=d.get("hi"),
                   log=d.get("log", False), integer=d.get("integer", False))


class SearchSpaceTree:
    """Immutable, topologically ordered tree of hyperparameter nodes."""

    def __init__(self, nodes: Sequence[HyperparameterNode], version: str = SPACE_VERSION):
        nodes = tuple(nodes)
        for i, node in enumerate(nodes):
            if node.id != i:
                raise ValueError(f"node ids must be 0..n-1, got {node.id} at position {i}")
            expected_depth = 0 if node.parent is None else nodes[node.parent].depth + 1
            if node.depth != expected_depth:
                raise ValueError(f"{node.name}: depth {node.depth} != {expected_depth}")
        self.nodes = nodes
        self.version = version
        self._index = {n.name: n.id for n in nodes}
        if len(self._index) != len(nodes):
            raise ValueError("node names must be unique")
        self.parents = np.array([-1 if n.parent is None else n.parent for n in nodes], dtype=np.int64)
        self.children: dict[int, tuple[int, ...]] = {}
        for n in nodes:
            if n.parent is not None:
                self.children[n.parent] = self.children.get(n.parent, ()) + (n.id,)
        self._strategies = {}
        for n in nodes:
            if n.kind == CATEGORICAL:
                self._strategies[n.id] = tuple(
                    nodes[c] for c in self.children.get(n.id, ())
                    if nodes[c].kind == BOOLEAN and nodes[c].name.startswith(n.name + "."))

    def __len__(self) -> int:
        return len(self.nodes)

    def __eq__(self, other) -> bool:
        return isinstance(other, SearchSpaceTree) and self.nodes == other.nodes

    def __hash__(self) -> int:
        return hash(self.nodes)

    @property
    def roots(self) -> tuple[HyperparameterNode, ...]:
        return tuple(n for n in self.nodes if n.parent is None)

    def id_of(self, name: str) -> int:
        return self._index[name]

    def node(self, key: int | str) -> HyperparameterNode:
        return self.nodes[self._index[key] if isinstance(key, str) else key]

    def strategies(self, root: int | str) -> tuple[HyperparameterNode, ...]:
        """Boolean strategy nodes below a categorical component root."""
        return self._strategies.get(self.node(root).id, ())

    def defaults(self) -> tuple:
        return tuple(n.default for n in self.nodes)

    def to_manifest(self) -> dict:
        return {"version": self.version, "nodes": [n.to_dict() for n in self.nodes]}

    def to_json(self, indent: int | None = 2) -> str:
        return json.dumps(self.to_manifest(), indent=indent)

    @classmethod
    def from_manifest(cls, manifest: dict) -> "SearchSpaceTree":
        return cls([HyperparameterNode.from_dict(d) for d in manifest["nodes"]],
                   version=str(manifest.get("version", SPACE_VERSION)))


@dataclass(frozen=True)
class ActivationMask:
    bits: tuple[bool, ...]

    def __post_init__(self):
        object.__setattr__(self, "bits", tuple(map(bool, self.bits)))

    def __len__(self) -> int:
        return len(self.bits)

    @classmethod
    def all(cls, tree: SearchSpaceTree, value: bool = True) -> "ActivationMask":
        return cls((value,) * len(tree))

    @classmethod
    def from_names(cls, tree: SearchSpaceTree, active: Iterable[str]) -> "ActivationMask":
        bits = [False] * len(tree)
        for name in active:
            bits[tree.id_of(name)] = True
        return cls(tuple(bits))

    def active_names(self, tree: SearchSpaceTree) -> list[str]:
        return [tree.nodes[i].name for i, b in enumerate(self.bits) if b]


@dataclass(frozen=True)
class PipelineCandidate:
    """One concrete value per node of the tree it was sampled from."""

    values: tuple
    names: tuple[str, ...] = field(repr=False)

    def __getitem__(self, name: str):
        return self.values[self.names.index(name)]

    def as_dict(self) -> dict:
        return dict(zip(self.names, self.values))

    @property
    def classifier(self) -> str:
        return self["classifier"]

    def params(self, prefix: str) -> dict:
        """Hyperparameters of one strategy, keyed without the prefix."""
        p = prefix + "."
        return {n[len(p):]: v for n, v in zip(self.names, self.values) if n.startswith(p)}


def _check_length(tree: SearchSpaceTree, mask: ActivationMask) -> None:
    if len(mask) != len(tree):
        raise InvalidMaskError(f"mask has {len(mask)} bits, tree has {len(tree)} nodes")


def normalize_mask(tree: SearchSpaceTree, raw: ActivationMask) -> ActivationMask:
    """Deactivate every node whose parent is inactive."""
    _check_length(tree, raw)
    bits = list(raw.bits)
    for node in tree.nodes:  # topological order
        if node.parent is not None and not bits[node.parent]:
            bits[node.id] = False
    return ActivationMask(tuple(bits))


def random_normalized_mask(tree: SearchSpaceTree, rng: np.random.Generator,
                           p_active: float = 0.5) -> ActivationMask:
    """Independent Bernoulli(p_active) bits, then closed under parent deactivation."""
    bits = rng.random(len(tree)) < p_active
    for child, parent in _levels(tree):
        bits[child] &= bits[parent]
    return ActivationMask(bits.tolist())


def _levels(tree: SearchSpaceTree) -> list:
    # (child ids, parent ids) per depth, shallow first
    levels = tree.__dict__.get("_levels")
    if levels is None:
        by_depth = {}
        for n in tree.nodes:
            if n.parent is not None:
                by_depth.setdefault(n.depth, []).append((n.id, n.parent))
        levels = [(np.array([c for c, _ in v]), np.array([p for _, p in v])) for _, v in sorted(by_depth.items())]
        tree.__dict__["_levels"] = levels
    return levels


def is_normalized(tree: SearchSpaceTree, mask: ActivationMask) -> bool:
    _check_length(tree, mask)
    return all(not mask.bits[n.id] or n.parent is None or mask.bits[n.parent] for n in tree.nodes)


def mask_to_features(mask: ActivationMask) -> np.ndarray:
    return np.asarray(mask.bits, dtype=np.float64)


def sample_candidate(tree: SearchSpaceTree, mask: ActivationMask, rng) -> PipelineCandidate:
    """Draw a pipeline candidate; inactive nodes keep their defaults.

    A component root that is active chooses uniformly among its active
    strategy nodes (falling back to the default strategy when none are
    active). Hyperparameters of strategies that were not chosen stay at
    their defaults so equivalent pipelines have identical candidates.
    """
    if not is_normalized(tree, mask):
        raise InvalidMaskError("mask violates parent/child closure; call normalize_mask first")
    rng = np.random.default_rng(rng) if not isinstance(rng, np.random.Generator) else rng
    plan = _plan(tree)
    bits = mask.bits
    values = list(tree.defaults())
    skip = set()
    for node in tree.nodes:
        i = node.id
        if i in skip or not bits[i] or i in plan.strategy_ids:
            continue
        options = plan.options.get(i)
        if options is None:
            values[i] = node.sample(rng)
            continue
        allowed = [c for c, sid in options if bits[sid]]
        if allowed:
            values[i] = allowed[int(rng.integers(len(allowed)))] if len(allowed) > 1 else allowed[0]
        for c, sid in options:
            if c != values[i]:
                skip.update(plan.descendants[sid])
    return _finalize(tree, values)


@dataclass(frozen=True)
class _Plan:
    options: dict  # root id -> [(choice, strategy id)] in choices order
    strategy_ids: frozenset
    descendants: dict


def _plan(tree: SearchSpaceTree) -> _Plan:
    plan = tree.__dict__.get("_sample_plan")
    if plan is None:
        options, sids, desc = {}, set(), {}
        for node in tree.nodes:
            strategies = tree.strategies(node.id) if node.kind == CATEGORICAL else ()
            if strategies:
                by_choice = {s.name[len(node.name) + 1:]: s.id for s in strategies}
                options[node.id] = [(c, by_choice[c]) for c in node.choices if c in by_choice]
                for s in strategies:
                    sids.add(s.id)
                    desc[s.id] = _descendants(tree, s.id)
        plan = _Plan(options, frozenset(sids), desc)
        tree.__dict__["_sample_plan"] = plan
    return plan


def _finalize(tree: SearchSpaceTree, values: list) -> PipelineCandidate:
    """Sync strategy flags with root choices; reset unchosen strategies' params."""
    for root in tree.roots:
        strategies = tree.strategies(root.id)
        chosen = values[root.id]
        for s in strategies:
            is_chosen = s.name == f"{root.name}.{chosen}"
            values[s.id] = is_chosen
            if not is_chosen:
                for d in _plan(tree).descendants[s.id]:
                    values[d] = tree.nodes[d].default
    return PipelineCandidate(tuple(values), tuple(n.name for n in tree.nodes))


def _descendants(tree: SearchSpaceTree, node_id: int) -> list[int]:
    out, stack = [], list(tree.children.get(node_id, ()))
    while stack:
        c = stack.pop()
        out.append(c)
        stack.extend(tree.children.get(c, ()))
    return out


def default_candidate(tree: SearchSpaceTree) -> PipelineCandidate:
    return sample_candidate(tree, ActivationMask.all(tree, False), 0)


def candidate_from_dict(tree: SearchSpaceTree, values: dict) -> PipelineCandidate:
    """Build a candidate from a partial name->value mapping (others default)."""
    out = list(tree.defaults())
    for name, v in values.items():
        node = tree.node(name)
        if not node.is_legal(v):
            raise ValueError(f"illegal value {v!r} for {name}")
        out[node.id] = v
    return _finalize(tree, out)


def encode_candidate(tree: SearchSpaceTree, candidate: PipelineCandidate,
                     mask: ActivationMask | None = None) -> np.ndarray:
    """Fixed-width numeric encoding used by the optimizer's surrogate.

    Per-node values normalized to [0, 1] (inactive nodes hold defaults),
    preceded by the mask bits when ``mask`` is given.
    """
    values = np.array([n.normalize_value(v) for n, v in zip(tree.nodes, candidate.values)],
                      dtype=np.float64)
    if mask is None:
        return values
    return np.concatenate([mask_to_features(mask), values])


# Compact default space ---------------------------------------------------------

_COMPONENTS = [
    # root, strategies (first is default), per-strategy hyperparameters
    ("encoding", ["onehot", "frequency", "ordinal"], {}),
    ("imputation", ["mean", "median"], {}),
    ("scaling", ["standard", "minmax", "none"], {}),
    ("sampling", ["none", "random_oversample"], {
        "random_oversample": [
            dict(name="ratio", kind=NUMERIC, lo=0.25, hi=1.0, default=1.0),
        ],
    }),
    ("class_weighting", ["none", "balanced"], {}),
    ("classifier", ["random_forest", "knn", "gaussian_nb", "decision_tree", "sgd_log", "sgd_hinge"], {
        "random_forest": [
            dict(name="n_estimators", kind=NUMERIC, lo=2, hi=64, default=10, log=True, integer=True),
            dict(name="criterion", kind=CATEGORICAL, choices=("gini", "entropy"), default="gini"),
            dict(name="max_features", kind=CATEGORICAL, choices=("sqrt", "log2", "all"), default="sqrt"),
            dict(name="max_depth", kind=NUMERIC, lo=1, hi=30, default=30, integer=True),
            dict(name="min_samples_leaf", kind=NUMERIC, lo=1, hi=20, default=1, integer=True),
            dict(name="bootstrap", kind=BOOLEAN, default=True),
        ],
        "knn": [
            dict(name="n_neighbors", kind=NUMERIC, lo=1, hi=50, default=5, log=True, integer=True),
            dict(name="weights", kind=CATEGORICAL, choices=("uniform", "distance"), default="uniform"),
            dict(name="p", kind=CATEGORICAL, choices=(2, 1), default=2),
        ],
        "gaussian_nb": [
            dict(name="var_smoothing", kind=NUMERIC, lo=1e-12, hi=1e-1, default=1e-9, log=True),
            dict(name="priors", kind=CATEGORICAL, choices=("empirical", "uniform"), default="empirical"),
        ],
        "decision_tree": [
            dict(name="criterion", kind=CATEGORICAL, choices=("gini", "entropy"), default="gini"),
            dict(name="max_depth", kind=NUMERIC, lo=1, hi=30, default=30, integer=True),
            dict(name="min_samples_split", kind=NUMERIC, lo=2, hi=20, default=2, integer=True),
            dict(name="min_samples_leaf", kind=NUMERIC, lo=1, hi=20, default=1, integer=True),
        ],
        "sgd_log": [
            dict(name="alpha", kind=NUMERIC, lo=1e-7, hi=1e-1, default=1e-4, log=True),
            dict(name="n_epochs", kind=NUMERIC, lo=1, hi=50, default=5, log=True, integer=True),
            dict(name="eta0", kind=NUMERIC, lo=1e-4, hi=1.0, default=0.01, log=True),
        ],
        "sgd_hinge": [
            dict(name="alpha", kind=NUMERIC, lo=1e-7, hi=1e-1, default=1e-4, log=True),
            dict(name="n_epochs", kind=NUMERIC, lo=1, hi=50, default=5, log=True, integer=True),
            dict(name="eta0", kind=NUMERIC, lo=1e-4, hi=1.0, default=0.01, log=True),
        ],
    }),
]


def _generate_default_space() -> SearchSpaceTree:
    nodes: list[HyperparameterNode] = []

    def add(name, kind, default, parent=None, **kw):
        depth = 0 if parent is None else nodes[parent].depth + 1
        if "choices" in kw:
            kw["choices"] = tuple(kw["choices"])
        if kind == NUMERIC:
            kw.setdefault("log", False)
            kw.setdefault("integer", False)
        nodes.append(HyperparameterNode(id=len(nodes), name=name, kind=kind, default=default,
                                        parent=parent, depth=depth, **kw))
        return len(nodes) - 1

    for root, strategies, params in _COMPONENTS:
        rid = add(root, CATEGORICAL, strategies[0], choices=strategies)
        for i, s in enumerate(strategies):
            sid = add(f"{root}.{s}", BOOLEAN, i == 0, parent=rid)
            for p in params.get(s, []):
                p = dict(p)
                add(f"{s}.{p.pop('name')}", p.pop("kind"), p.pop("default"), parent=sid, **p)
    return SearchSpaceTree(nodes)


@lru_cache(maxsize=None)
def build_default_space() -> SearchSpaceTree:
    """Load the versioned default space from the bundled manifest."""
    text = resources.files("constraint_automl.resources").joinpath("space_v1.json").read_text()
    return SearchSpaceTree.from_manifest(json.loads(text))
