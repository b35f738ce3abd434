import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from constraint_automl.data import make_blobs, make_nominal
from constraint_automl.errors import DataFormatError, InvalidInputError
from constraint_automl.learners.forest import fit_tree, forest_fit, forest_predict, forest_predict_std
from constraint_automl.learners.metrics import balanced_accuracy, equal_opportunity
from constraint_automl.learners.pipeline import HEADER_BYTES, WORD_BYTES, evaluate, fit, predict
from constraint_automl.search_space import candidate_from_dict, default_candidate

from conftest import toy_dataset
import oracles

# 20 rows, 2 classes; separable by an axis-aligned tree of depth <= 2 (oracle-checked below)
SEP_X = [[0.1, 0.2], [0.3, 0.1], [0.2, 0.4], [0.4, 0.3], [0.15, 0.35], [0.35, 0.25], [0.05, 0.1],
         [0.25, 0.15], [0.45, 0.05], [0.3, 0.45],
         [0.9, 0.8], [0.7, 0.9], [0.8, 0.6], [0.6, 0.7], [0.85, 0.95], [0.65, 0.85], [0.95, 0.65],
         [0.75, 0.75], [0.55, 0.9], [0.7, 0.55]]
SEP_Y = [0] * 10 + [1] * 10


def test_separable_fixture_oracle():
    assert oracles.depth2_tree_separates(SEP_X, SEP_Y)


def test_default_pipeline_fits_separable_blob(tree):
    ds = toy_dataset(SEP_X, SEP_Y)
    tp = fit(default_candidate(tree), ds, seed=0)
    labels, _ = predict(tp, ds)
    assert balanced_accuracy(ds.y, labels) == 1.0


def _cand(tree, **values):
    return candidate_from_dict(tree, values)


def test_knn_k1_memorizes(tree, blobs):
    c = _cand(tree, classifier="knn", **{"classifier.knn": True, "knn.n_neighbors": 1})
    tp = fit(c, blobs)
    labels, _ = predict(tp, blobs)
    assert np.array_equal(labels, blobs.y)


@pytest.mark.parametrize("clf", ["knn", "gaussian_nb", "decision_tree", "random_forest", "sgd_log", "sgd_hinge"])
def test_fit_predict_deterministic(tree, clf):
    ds = make_nominal(120, 3, 2, 4, seed=5, missing=0.05)
    c = _cand(tree, classifier=clf, **{f"classifier.{clf}": True})
    a, b = fit(c, ds, seed=11), fit(c, ds, seed=11)
    assert a.size_bytes == b.size_bytes > 0
    la, _ = predict(a, ds)
    lb, _ = predict(b, ds)
    assert np.array_equal(la, lb)
    assert np.array_equal(la, predict(a, ds)[0])


def test_predict_zero_rows_and_schema(tree, blobs):
    tp = fit(default_candidate(tree), blobs)
    labels, t = predict(tp, np.empty((0, blobs.n_features)))
    assert len(labels) == 0 and t == 0.0
    with pytest.raises(DataFormatError):
        predict(tp, np.zeros((3, blobs.n_features + 1)))


def test_gaussian_nb_size_closed_form(tree):
    ds = make_blobs(90, 4, 3, 1.0, seed=2)
    c = _cand(tree, classifier="gaussian_nb", scaling="none",
              **{"classifier.gaussian_nb": True, "scaling.none": True, "scaling.standard": False})
    tp = fit(c, ds)
    C, F, k = 3, 4, 4
    assert tp.size_bytes == HEADER_BYTES * k + WORD_BYTES * (2 * C * F + C)


def test_knn_size_grows_with_rows(tree):
    c = _cand(tree, classifier="knn", **{"classifier.knn": True})
    small = make_blobs(50, 3, 2, 1.0, seed=1)
    big = make_blobs(100, 3, 2, 1.0, seed=1)
    assert fit(c, big).size_bytes > fit(c, small).size_bytes


def test_stump_smaller_than_deep_tree(tree):
    ds = make_blobs(200, 4, 2, 3.0, seed=4)
    stump = _cand(tree, classifier="decision_tree", **{"classifier.decision_tree": True,
                                                      "decision_tree.max_depth": 1})
    deep = _cand(tree, classifier="decision_tree", **{"classifier.decision_tree": True,
                                                     "decision_tree.max_depth": 10})
    a, b = fit(stump, ds), fit(deep, ds)
    # node counts from the fitted trees back the size ordering
    assert a.classifier.tree_.n_nodes == 3
    assert b.classifier.tree_.n_nodes > 3
    assert a.size_bytes < b.size_bytes


def test_balanced_accuracy_examples():
    assert balanced_accuracy([0, 1, 1, 0], [0, 1, 1, 0]) == 1.0
    assert balanced_accuracy([0, 0, 1, 1], [0, 0, 0, 0]) == 0.5
    assert balanced_accuracy([0, 1, 2], [0, 1, 0]) == pytest.approx(2 / 3)
    with pytest.raises(InvalidInputError):
        balanced_accuracy([0, 1], [0])


labels = st.lists(st.integers(0, 2), min_size=1, max_size=40)


@settings(max_examples=100, deadline=None)
@given(st.data())
def test_balanced_accuracy_permutation_invariant(data):
    y = data.draw(labels)
    p = data.draw(st.lists(st.integers(0, 2), min_size=len(y), max_size=len(y)))
    perm = data.draw(st.permutations(range(len(y))))
    a = balanced_accuracy(y, p)
    b = balanced_accuracy([y[i] for i in perm], [p[i] for i in perm])
    assert a == pytest.approx(b)
    assert a == pytest.approx(oracles.balanced_accuracy(y, p))


def test_equal_opportunity_examples():
    y = [1, 1, 1, 1, 0, 0]
    s = [0, 0, 1, 1, 0, 1]
    assert equal_opportunity(y, [1, 0, 1, 0, 0, 0], s) == 1.0
    assert equal_opportunity(y, [1, 1, 0, 0, 0, 0], s) == 0.0
    assert equal_opportunity(y, [1] * 6, s) == 1.0
    with pytest.raises(InvalidInputError):
        equal_opportunity(y, y, [0, 1, 2, 0, 1, 0])


@settings(max_examples=100, deadline=None)
@given(st.data())
def test_equal_opportunity_range_and_group_swap(data):
    n = data.draw(st.integers(1, 30))
    y = data.draw(st.lists(st.integers(0, 1), min_size=n, max_size=n))
    p = data.draw(st.lists(st.integers(0, 1), min_size=n, max_size=n))
    s = data.draw(st.lists(st.integers(0, 1), min_size=n, max_size=n))
    v = equal_opportunity(y, p, s)
    assert 0.0 <= v <= 1.0
    assert v == equal_opportunity(y, p, [1 - g for g in s])


def test_pipeline_metrics_ranges(tree, blobs):
    tp = fit(default_candidate(tree), blobs)
    m, _ = evaluate(tp, blobs)
    assert 0 <= m.balanced_accuracy <= 1 and 0 <= m.equal_opportunity <= 1
    assert m.training_time >= 0 and m.inference_time_per_instance >= 0 and m.size_bytes > 0


def test_forest_examples():
    X = np.linspace(0, 1, 100)[:, None]
    const = forest_fit(X, np.full(100, 3.0), T=5, seed=0)
    assert np.all(forest_predict_std(const, X) == 0)
    one = forest_fit(X, X[:, 0], T=1, seed=0)
    assert np.all(forest_predict_std(one, np.random.default_rng(0).random((20, 1))) == 0)
    lin = forest_fit(X, X[:, 0], T=10, seed=0)
    assert 0.0 <= forest_predict(lin, [[0.5]])[0] <= 1.0
    with pytest.raises(InvalidInputError):
        forest_fit(np.empty((0, 2)), [], T=3)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31 - 1), st.integers(2, 40))
def test_forest_std_nonnegative(seed, n):
    rng = np.random.default_rng(seed)
    X, y = rng.random((n, 3)), rng.random(n)
    model = forest_fit(X, y, T=4, seed=seed)
    Q = rng.random((10, 3))
    std = forest_predict_std(model, Q)
    assert np.all(std >= 0)
    per_tree = model.per_tree_scalar(Q)
    assert per_tree.shape == (4, 10)
    agree = np.ptp(per_tree, axis=0) == 0
    assert np.all(std[agree] == 0)
    assert np.allclose(std, per_tree.std(axis=0))


def test_tree_pure_leaves_on_training_data():
    rng = np.random.default_rng(0)
    X = rng.random((60, 3))
    y = (X[:, 0] + X[:, 1] > 1).astype(float)
    t = fit_tree(X, y, n_classes=2)
    assert np.array_equal(t.predict_values(X).argmax(axis=1), y)
