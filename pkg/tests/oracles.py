"""Independent brute-force references for the derived test values.

Nothing here imports the package: every function recomputes its answer
from first principles with plain Python so the frozen constants in the
tests have a second, unrelated route.
"""
import itertools
import math


def depth2_tree_separates(X, y):
    """True when some axis-aligned tree of depth <= 2 labels every row correctly."""
    n, f = len(X), len(X[0])

    def thresholds(rows, j):
        vals = sorted({X[i][j] for i in rows})
        return [(a + b) / 2 for a, b in zip(vals, vals[1:])]

    def pure(rows):
        return len({y[i] for i in rows}) <= 1

    def depth1(rows):
        if pure(rows):
            return True
        for j in range(f):
            for t in thresholds(rows, j):
                left = [i for i in rows if X[i][j] <= t]
                right = [i for i in rows if X[i][j] > t]
                if pure(left) and pure(right):
                    return True
        return False

    rows = list(range(n))
    if depth1(rows):
        return True
    for j in range(f):
        for t in thresholds(rows, j):
            left = [i for i in rows if X[i][j] <= t]
            right = [i for i in rows if X[i][j] > t]
            if depth1(left) and depth1(right):
                return True
    return False


def perceptron_separable(X, y, epochs=1000):
    """Binary linear separability by running the perceptron to convergence."""
    w = [0.0] * (len(X[0]) + 1)
    for _ in range(epochs):
        mistakes = 0
        for x, t in zip(X, y):
            s = 1 if t == 1 else -1
            z = w[-1] + sum(wi * xi for wi, xi in zip(w, x))
            if s * z <= 0:
                mistakes += 1
                for k, xi in enumerate(x):
                    w[k] += s * xi
                w[-1] += s
        if mistakes == 0:
            return True
    return False


def balanced_accuracy(y, p):
    classes = sorted(set(y))
    rec = []
    for c in classes:
        idx = [i for i, t in enumerate(y) if t == c]
        rec.append(sum(1 for i in idx if p[i] == c) / len(idx))
    return sum(rec) / len(rec)


def vote(members, n_classes):
    out = []
    for col in zip(*members):
        counts = [col.count(c) for c in range(n_classes)]
        out.append(counts.index(max(counts)))
    return out


def greedy_vote_path(preds, y, n_classes, max_members=10):
    """Greedy forward selection with replacement; strict improvement only."""
    chosen, bas, cur = [], [], -1.0
    while len(chosen) < max_members:
        best = None
        for i in range(len(preds)):
            ba = balanced_accuracy(y, vote([preds[j] for j in chosen + [i]], n_classes))
            if ba > cur and (best is None or ba > best[1]):
                best = (i, ba)
        if best is None:
            break
        chosen.append(best[0])
        bas.append(best[1])
        cur = best[1]
    return chosen, bas


def best_multiset_vote(preds, y, n_classes, max_size=3):
    best = 0.0
    for k in range(1, max_size + 1):
        for combo in itertools.combinations_with_replacement(range(len(preds)), k):
            best = max(best, balanced_accuracy(y, vote([preds[i] for i in combo], n_classes)))
    return best


def split_collision_probability(n, k):
    """Chance two uniform k-subsets of n rows coincide."""
    return 1.0 / math.comb(n, k)


def binomial_3sigma(n, p=0.5):
    mu, sd = n * p, math.sqrt(n * p * (1 - p))
    return mu - 3 * sd, mu + 3 * sd


def step_curve_first_time(times, bas, target):
    """Smallest time whose BA reaches ``target`` (else the last time)."""
    for t, b in zip(times, bas):
        if b >= target:
            return t
    return times[-1]


def step_value(times, bas, t):
    v = 0.0
    for ti, b in zip(times, bas):
        if ti <= t:
            v = b
    return v


def nearest_neighbor_argmax_cell(xs, scores):
    """Interval of the 1-D line where a fully grown tree predicts the top score."""
    pts = sorted(zip(xs, scores))
    i = max(range(len(pts)), key=lambda k: pts[k][1])
    lo = 0.0 if i == 0 else (pts[i - 1][0] + pts[i][0]) / 2
    hi = 1.0 if i == len(pts) - 1 else (pts[i][0] + pts[i + 1][0]) / 2
    return lo, hi
