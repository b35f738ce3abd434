import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from constraint_automl.errors import InvalidMaskError
from constraint_automl.search_space import (ActivationMask, SearchSpaceTree, build_default_space, default_candidate,
                                            encode_candidate, is_normalized, mask_to_features, normalize_mask,
                                            random_normalized_mask, sample_candidate)


def bits_for(tree):
    return st.lists(st.booleans(), min_size=len(tree), max_size=len(tree)).map(lambda b: ActivationMask(tuple(b)))


TREE = build_default_space()


def test_default_space_shape(tree):
    assert {r.name for r in tree.roots} == {"encoding", "imputation", "scaling", "sampling",
                                             "class_weighting", "classifier"}
    assert len(tree) >= 40
    assert tree.node(tree.node("knn.n_neighbors").parent).name == "classifier.knn"
    assert len(tree.strategies("classifier")) == 6
    assert build_default_space() == tree


def test_node_invariants(tree):
    for i, n in enumerate(tree.nodes):
        assert n.id == i
        if n.parent is not None:
            assert n.parent < n.id
        if n.kind == "numeric":
            assert n.lo < n.hi
            assert not n.log or n.lo > 0
            assert n.lo <= n.default <= n.hi
        elif n.kind == "categorical":
            assert n.default in n.choices


def test_manifest_roundtrip(tree):
    assert SearchSpaceTree.from_manifest(tree.to_manifest()) == tree


def test_normalize_examples(tree):
    raw = ActivationMask.from_names(tree, ["classifier", "knn.n_neighbors"])
    out = normalize_mask(tree, raw)
    assert not out.bits[tree.id_of("knn.n_neighbors")]
    for v in (True, False):
        m = ActivationMask.all(tree, v)
        assert normalize_mask(tree, m) == m


def test_normalize_length_mismatch(tree):
    with pytest.raises(InvalidMaskError):
        normalize_mask(tree, ActivationMask((True,) * (len(tree) - 1)))


@settings(max_examples=200, deadline=None)
@given(bits_for(TREE))
def test_normalize_closure_idempotent_and_shrinking(raw):
    out = normalize_mask(TREE, raw)
    for n in TREE.nodes:
        if n.parent is not None and out.bits[n.id]:
            assert out.bits[n.parent]
    assert normalize_mask(TREE, out) == out
    assert all(r or not o for r, o in zip(raw.bits, out.bits))


@settings(max_examples=100, deadline=None)
@given(bits_for(TREE), bits_for(TREE))
def test_mask_features_injective(a, b):
    a, b = normalize_mask(TREE, a), normalize_mask(TREE, b)
    assert (np.array_equal(mask_to_features(a), mask_to_features(b))) == (a == b)


def test_mask_features_examples(tree):
    assert np.array_equal(mask_to_features(ActivationMask.all(tree, False)), np.zeros(len(tree)))
    assert np.array_equal(mask_to_features(ActivationMask.all(tree)), np.ones(len(tree)))
    m = normalize_mask(tree, ActivationMask.from_names(tree, ["classifier", "classifier.knn", "scaling"]))
    assert mask_to_features(m).sum() == 3


def test_random_normalized_mask(tree):
    rng = np.random.default_rng(0)
    for _ in range(50):
        assert is_normalized(tree, random_normalized_mask(tree, rng, 0.5))


def test_all_false_mask_gives_defaults(tree):
    off = ActivationMask.all(tree, False)
    for seed in range(5):
        assert sample_candidate(tree, off, np.random.default_rng(seed)) == default_candidate(tree)


def test_single_strategy_keeps_hyperparameters_default(tree):
    m = ActivationMask.from_names(tree, ["classifier", "classifier.knn"])
    c = sample_candidate(tree, m, np.random.default_rng(1))
    d = default_candidate(tree)
    assert c.classifier in ("knn", d.classifier)
    assert c.params("knn") == d.params("knn")


def test_sampling_deterministic_and_legal(tree):
    full = ActivationMask.all(tree)
    a = sample_candidate(tree, full, np.random.default_rng(7))
    assert a == sample_candidate(tree, full, np.random.default_rng(7))
    rng = np.random.default_rng(2)
    for _ in range(100):
        c = sample_candidate(tree, full, rng)
        for n, v in zip(tree.nodes, c.values):
            if n.kind == "numeric":
                assert n.lo <= v <= n.hi
            elif n.kind == "categorical":
                assert v in n.choices


def test_unnormalized_mask_rejected(tree):
    raw = ActivationMask.from_names(tree, ["knn.n_neighbors"])
    with pytest.raises(InvalidMaskError):
        sample_candidate(tree, raw, np.random.default_rng(0))


def test_encoding_fixed_width(tree):
    rng = np.random.default_rng(3)
    widths = {len(encode_candidate(tree, sample_candidate(tree, ActivationMask.all(tree), rng)))
              for _ in range(20)}
    assert len(widths) == 1
    enc = encode_candidate(tree, default_candidate(tree))
    assert np.all((enc >= 0) & (enc <= 1))
