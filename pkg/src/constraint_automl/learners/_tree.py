"""Compiled CART builder shared by every tree-based model in the package.

Trees are stored as flat node arrays (feature, threshold, left, right,
value). Leaves have ``feature == -1``. Rows go left when
``x[feature] <= threshold``.
"""
from __future__ import annotations

import numpy as np
from numba import njit

GINI = 0
ENTROPY = 1
MSE = 2

_EPS = 1e-12
SMALL_NODE = 24


@njit(cache=True)
def _impurity(stats, n_classes, criterion, total_w):
    # stats: class weights (classification) or [sum, sumsq] (regression)
    if total_w <= 0.0:
        return 0.0
    if criterion == MSE:
        mean = stats[0] / total_w
        return stats[1] / total_w - mean * mean
    if criterion == GINI:
        acc = 0.0
        for k in range(n_classes):
            p = stats[k] / total_w
            acc += p * p
        return 1.0 - acc
    acc = 0.0
    for k in range(n_classes):
        p = stats[k] / total_w
        if p > 0.0:
            acc -= p * np.log(p)
    return acc


@njit(cache=True)
def _split_score(stats, lstats, n_classes, criterion, total_w, lw):
    # weighted child impurity (classification) or summed squared error (regression)
    rw = total_w - lw
    if n_classes > 0:
        score = lw * _impurity(lstats, n_classes, criterion, lw)
        for q in range(n_classes):
            stats[q] -= lstats[q]
        score += rw * _impurity(stats, n_classes, criterion, rw)
        for q in range(n_classes):
            stats[q] += lstats[q]
        return score
    sse_l = lstats[1] - (lstats[0] * lstats[0] / lw if lw > 0 else 0.0)
    rs = stats[0] - lstats[0]
    rss = stats[1] - lstats[1]
    sse_r = rss - (rs * rs / rw if rw > 0 else 0.0)
    return sse_l + sse_r


@njit(cache=True)
def build_tree(X, y, w, cnt, n_classes, criterion, max_depth, min_samples_split,
               min_samples_leaf, max_features, seed):
    """Grow one tree.

    ``y`` holds class indices as floats (classification) or targets
    (regression, ``n_classes == 0``). ``w`` are per-row weights and ``cnt``
    per-row multiplicities (bootstrap counts); rows with ``cnt == 0`` are
    ignored. ``max_depth < 0`` means unbounded.
    """
    np.random.seed(seed)
    n, f = X.shape
    n_out = n_classes if n_classes > 0 else 1
    n_stats = n_classes if n_classes > 0 else 2

    rows = np.empty(n, dtype=np.int64)
    m = 0
    for i in range(n):
        if cnt[i] > 0:
            rows[m] = i
            m += 1
    rows = rows[:m]
    ww = np.empty(n)
    for i in range(n):
        ww[i] = w[i] * cnt[i]

    cap = 2 * m + 1
    feature = np.full(cap, -1, dtype=np.int64)
    threshold = np.zeros(cap)
    left = np.full(cap, -1, dtype=np.int64)
    right = np.full(cap, -1, dtype=np.int64)
    value = np.zeros((cap, n_out))
    n_nodes = 0
    tree_depth = 0

    # stack entries: start, end, depth, parent, is_left
    st_start = np.empty(cap, dtype=np.int64)
    st_end = np.empty(cap, dtype=np.int64)
    st_depth = np.empty(cap, dtype=np.int64)
    st_parent = np.empty(cap, dtype=np.int64)
    st_left = np.empty(cap, dtype=np.int64)
    top = 0
    st_start[0] = 0
    st_end[0] = m
    st_depth[0] = 0
    st_parent[0] = -1
    st_left[0] = 0
    top = 1

    stats = np.zeros(n_stats)
    lstats = np.zeros(n_stats)
    feats = np.arange(f)
    vals = np.empty(m)
    order = np.empty(m, dtype=np.int64)
    tmp = np.empty(m, dtype=np.int64)

    while top > 0:
        top -= 1
        start = st_start[top]
        end = st_end[top]
        depth = st_depth[top]
        parent = st_parent[top]
        is_left = st_left[top]

        node = n_nodes
        n_nodes += 1
        if parent >= 0:
            if is_left == 1:
                left[parent] = node
            else:
                right[parent] = node
        if depth > tree_depth:
            tree_depth = depth

        stats[:] = 0.0
        total_w = 0.0
        total_c = 0
        for j in range(start, end):
            r = rows[j]
            total_w += ww[r]
            total_c += cnt[r]
            if n_classes > 0:
                stats[int(y[r])] += ww[r]
            else:
                stats[0] += ww[r] * y[r]
                stats[1] += ww[r] * y[r] * y[r]
        if total_w > 0.0:
            if n_classes > 0:
                for k in range(n_classes):
                    value[node, k] = stats[k] / total_w
            else:
                value[node, 0] = stats[0] / total_w
        node_imp = _impurity(stats, n_classes, criterion, total_w)

        if ((max_depth >= 0 and depth >= max_depth) or total_c < min_samples_split
                or total_c < 2 * min_samples_leaf or node_imp <= _EPS or end - start < 2):
            continue

        best_score = np.inf
        best_feat = -1
        best_thr = 0.0
        # lazily shuffled feature order; stop after max_features non-constant features
        for i in range(f):
            feats[i] = i
        visited = 0
        for fi in range(f):
            if visited >= max_features:
                break
            jj = fi + np.random.randint(f - fi)
            feat = feats[jj]
            feats[jj] = feats[fi]
            feats[fi] = feat
            k = end - start
            lo = np.inf
            hi = -np.inf
            a = X[rows[start], feat]
            b = a
            n_distinct = 1
            for j in range(k):
                v = X[rows[start + j], feat]
                vals[j] = v
                if v < lo:
                    lo = v
                if v > hi:
                    hi = v
                if n_distinct < 3 and v != a and v != b:
                    if n_distinct == 1:
                        b = v
                    n_distinct += 1
            if hi - lo <= _EPS:
                continue
            visited += 1
            if n_distinct == 2:
                # two-valued column: the single candidate split needs no sort
                lstats[:] = 0.0
                lw = 0.0
                lc = 0
                for j in range(k):
                    if vals[j] == lo:
                        r = rows[start + j]
                        lw += ww[r]
                        lc += cnt[r]
                        if n_classes > 0:
                            lstats[int(y[r])] += ww[r]
                        else:
                            lstats[0] += ww[r] * y[r]
                            lstats[1] += ww[r] * y[r] * y[r]
                rc = total_c - lc
                if lc < min_samples_leaf or rc < min_samples_leaf:
                    continue
                score = _split_score(stats, lstats, n_classes, criterion, total_w, lw)
                if score < best_score - 1e-12 * (1.0 + abs(score)):
                    best_score = score
                    best_feat = feat
                    thr = 0.5 * (lo + hi)
                    if thr >= hi:
                        thr = lo
                    best_thr = thr
                continue
            if k <= SMALL_NODE:
                # stable insertion sort; cheaper than an allocating argsort on tiny nodes
                for j in range(k):
                    v = vals[j]
                    q = j - 1
                    while q >= 0 and vals[order[q]] > v:
                        order[q + 1] = order[q]
                        q -= 1
                    order[q + 1] = j
            else:
                order[:k] = np.argsort(vals[:k], kind="mergesort")
            lstats[:] = 0.0
            lw = 0.0
            lc = 0
            for j in range(k - 1):
                r = rows[start + order[j]]
                lw += ww[r]
                lc += cnt[r]
                if n_classes > 0:
                    lstats[int(y[r])] += ww[r]
                else:
                    lstats[0] += ww[r] * y[r]
                    lstats[1] += ww[r] * y[r] * y[r]
                x0 = vals[order[j]]
                x1 = vals[order[j + 1]]
                if x1 - x0 <= _EPS:
                    continue
                rc = total_c - lc
                if lc < min_samples_leaf or rc < min_samples_leaf:
                    continue
                score = _split_score(stats, lstats, n_classes, criterion, total_w, lw)
                if score < best_score - 1e-12 * (1.0 + abs(score)):
                    best_score = score
                    best_feat = feat
                    thr = 0.5 * (x0 + x1)
                    if thr >= x1:
                        thr = x0
                    best_thr = thr
        if best_feat < 0:
            continue

        # stable partition of rows[start:end]
        nl = 0
        nr = 0
        for j in range(start, end):
            r = rows[j]
            if X[r, best_feat] <= best_thr:
                rows[start + nl] = r
                nl += 1
            else:
                tmp[nr] = r
                nr += 1
        for j in range(nr):
            rows[start + nl + j] = tmp[j]
        feature[node] = best_feat
        threshold[node] = best_thr
        # push right first so the left subtree is numbered first
        st_start[top] = start + nl
        st_end[top] = end
        st_depth[top] = depth + 1
        st_parent[top] = node
        st_left[top] = 0
        top += 1
        st_start[top] = start
        st_end[top] = start + nl
        st_depth[top] = depth + 1
        st_parent[top] = node
        st_left[top] = 1
        top += 1

    return (feature[:n_nodes].copy(), threshold[:n_nodes].copy(), left[:n_nodes].copy(),
            right[:n_nodes].copy(), value[:n_nodes].copy(), tree_depth)


@njit(cache=True)
def apply_tree(X, feature, threshold, left, right):
    """Leaf index reached by every row."""
    n = X.shape[0]
    out = np.empty(n, dtype=np.int64)
    for i in range(n):
        node = 0
        while feature[node] >= 0:
            if X[i, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[i] = node
    return out


@njit(cache=True)
def forest_values(X, features, thresholds, lefts, rights, values, offsets, n_out):
    """Per-tree outputs for a forest packed into concatenated node arrays.

    Returns an array of shape (n_trees, n_rows, n_out).
    """
    n_trees = offsets.shape[0] - 1
    n = X.shape[0]
    out = np.empty((n_trees, n, n_out))
    for t in range(n_trees):
        base = offsets[t]
        for i in range(n):
            node = 0
            while features[base + node] >= 0:
                if X[i, features[base + node]] <= thresholds[base + node]:
                    node = lefts[base + node]
                else:
                    node = rights[base + node]
            for k in range(n_out):
                out[t, i, k] = values[base + node, k]
    return out
