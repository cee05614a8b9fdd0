"""Hot loops for tree induction, tree traversal and nearest-neighbour search.

Each kernel exists twice: a numba loop (``*_jit``) and a vectorized numpy
version (``*_np``). Arithmetic is ordered identically in both so results are
bit-for-bit equal; ``tests/test_kernels.py`` holds them to that.
"""
import numpy as np

from .._accel import njit, select

# -- best Gini split ----------------------------------------------------------
#
# score = sum_c L_c^2 / W_L + sum_c R_c^2 / W_R, maximized. This is the
# weighted-Gini criterion up to a node constant. Ties keep the first feature
# (in the order given) and then the lowest threshold.


@njit
def _best_split_jit(X, y, w, features, n_classes):
    m = X.shape[0]
    best_score = -1.0
    best_feat = -1
    best_thr = 0.0
    left = np.zeros(n_classes)
    total = np.zeros(n_classes)
    for fi in range(features.shape[0]):
        f = features[fi]
        col = X[:, f].copy()
        order = np.argsort(col, kind="mergesort")
        if col[order[0]] == col[order[m - 1]]:
            continue
        for c in range(n_classes):
            total[c] = 0.0
            left[c] = 0.0
        for i in range(m):
            j = order[i]
            total[y[j]] += w[j]
        for i in range(m - 1):
            j = order[i]
            left[y[j]] += w[j]
            v0 = col[j]
            v1 = col[order[i + 1]]
            if v0 == v1:
                continue
            wl = 0.0
            wr = 0.0
            sl = 0.0
            sr = 0.0
            for c in range(n_classes):
                r = total[c] - left[c]
                wl += left[c]
                wr += r
                sl += left[c] * left[c]
                sr += r * r
            if wl <= 0.0 or wr <= 0.0:
                continue
            score = sl / wl + sr / wr
            if score > best_score:
                best_score = score
                best_feat = f
                thr = (v0 + v1) / 2.0
                if thr >= v1:
                    thr = v0
                best_thr = thr
    return best_feat, best_thr, best_score


def _best_split_np(X, y, w, features, n_classes):
    best_score = -1.0
    best_feat = -1
    best_thr = 0.0
    m = X.shape[0]
    for f in features:
        col = X[:, f]
        order = np.argsort(col, kind="stable")
        v = col[order]
        if v[0] == v[m - 1]:
            continue
        onehot = np.zeros((m, n_classes))
        onehot[np.arange(m), y[order]] = w[order]
        cum = np.cumsum(onehot, axis=0)
        total = cum[-1]
        left = cum[:-1]
        right = total - left
        wl = np.zeros(m - 1)
        wr = np.zeros(m - 1)
        sl = np.zeros(m - 1)
        sr = np.zeros(m - 1)
        for c in range(n_classes):
            wl += left[:, c]
            wr += right[:, c]
            sl += left[:, c] * left[:, c]
            sr += right[:, c] * right[:, c]
        valid = (v[:-1] != v[1:]) & (wl > 0.0) & (wr > 0.0)
        if not valid.any():
            continue
        with np.errstate(divide="ignore", invalid="ignore"):
            score = np.where(valid, sl / wl + sr / wr, -np.inf)
        i = int(np.argmax(score))
        if score[i] > best_score:
            best_score = float(score[i])
            best_feat = int(f)
            v0, v1 = v[i], v[i + 1]
            thr = (v0 + v1) / 2.0
            best_thr = float(v0 if thr >= v1 else thr)
    return best_feat, best_thr, best_score


def best_split(X, y, w, features, n_classes, use_jit=None):
    """Return ``(feature, threshold, score)``; feature is -1 when no split exists."""
    fn = select(_best_split_jit, _best_split_np, use_jit)
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.int64)
    w = np.ascontiguousarray(w, dtype=np.float64)
    features = np.ascontiguousarray(features, dtype=np.int64)
    f, thr, score = fn(X, y, w, features, int(n_classes))
    return int(f), float(thr), float(score)


# -- tree traversal -----------------------------------------------------------


@njit
def _tree_apply_jit(X, feature, threshold, left, right):
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


def _tree_apply_np(X, feature, threshold, left, right):
    node = np.zeros(X.shape[0], dtype=np.int64)
    active = feature[node] >= 0
    rows = np.arange(X.shape[0])
    while active.any():
        idx = rows[active]
        nd = node[idx]
        go_left = X[idx, feature[nd]] <= threshold[nd]
        node[idx] = np.where(go_left, left[nd], right[nd])
        active[idx] = feature[node[idx]] >= 0
    return node


def tree_apply(X, feature, threshold, left, right, use_jit=None):
    """Index of the leaf each row of ``X`` lands in."""
    fn = select(_tree_apply_jit, _tree_apply_np, use_jit)
    return fn(np.ascontiguousarray(X, dtype=np.float64), feature, threshold, left, right)


# -- k nearest neighbours -----------------------------------------------------
#
# Squared distances are accumulated feature by feature in index order; ties
# in distance keep the lower training index (stable sort).


@njit
def _knn_query_jit(Q, X, k):
    nq = Q.shape[0]
    n = X.shape[0]
    d = X.shape[1]
    idx_out = np.empty((nq, k), dtype=np.int64)
    dist_out = np.empty((nq, k))
    dist = np.empty(n)
    for q in range(nq):
        for i in range(n):
            s = 0.0
            for j in range(d):
                diff = Q[q, j] - X[i, j]
                s += diff * diff
            dist[i] = s
        order = np.argsort(dist, kind="mergesort")
        for t in range(k):
            idx_out[q, t] = order[t]
            dist_out[q, t] = dist[order[t]]
    return idx_out, dist_out


def _knn_query_np(Q, X, k, chunk=512):
    nq = Q.shape[0]
    idx_out = np.empty((nq, k), dtype=np.int64)
    dist_out = np.empty((nq, k))
    for start in range(0, nq, chunk):
        q = Q[start:start + chunk]
        dist = np.zeros((q.shape[0], X.shape[0]))
        for j in range(X.shape[1]):
            diff = q[:, j, None] - X[None, :, j]
            dist += diff * diff
        order = np.argsort(dist, axis=1, kind="stable")[:, :k]
        idx_out[start:start + chunk] = order
        dist_out[start:start + chunk] = np.take_along_axis(dist, order, axis=1)
    return idx_out, dist_out


def knn_query(Q, X, k, use_jit=None):
    """Indices and squared distances of the ``k`` nearest rows of ``X`` per query."""
    fn = select(_knn_query_jit, _knn_query_np, use_jit)
    Q = np.ascontiguousarray(Q, dtype=np.float64)
    X = np.ascontiguousarray(X, dtype=np.float64)
    return fn(Q, X, int(k))
