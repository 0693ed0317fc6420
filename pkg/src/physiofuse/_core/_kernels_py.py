"""Pure numpy implementations of the tree kernels.

Every function here has a twin in ``_kernels.pyx`` with the same signature
and, for identical inputs, bit-identical outputs. Split search works on a
presorted column order (stable argsort of each feature over all training
rows) plus a per-row multiplicity vector, so no sorting happens per node.
"""
import numpy as np


def _node_sorted_rows(counts, order, features):
    sel = order[features]
    keep = counts[sel] > 0
    n_unique = int(np.count_nonzero(counts))
    return sel[keep].reshape(len(features), n_unique)


def _midpoints(lo, hi):
    thr = 0.5 * (lo + hi)
    return np.where(thr > lo, thr, hi)


def best_split_gini(X, y, counts, order, features, n_classes, min_samples_leaf):
    """Best Gini split over ``features`` for the rows with ``counts > 0``.

    Returns ``(feature, threshold, score)`` where ``score`` is
    ``sum(cL**2)/nL + sum(cR**2)/nR`` (larger is better) and ``feature`` is
    -1 when no admissible split exists.
    """
    features = np.asarray(features, dtype=np.intp)
    if len(features) == 0:
        return -1, 0.0, -np.inf
    rows = _node_sorted_rows(counts, order, features)
    if rows.shape[1] < 2:
        return -1, 0.0, -np.inf
    vals = X[rows, features[:, None]]
    w = counts[rows].astype(np.float64)
    onehot = np.zeros(rows.shape + (n_classes,))
    np.put_along_axis(onehot, y[rows][..., None], w[..., None], axis=-1)
    left = np.cumsum(onehot, axis=1)[:, :-1, :]
    total = left[:, -1:, :] + onehot[:, -1:, :]
    right = total - left
    n_left = left.sum(axis=-1)
    n_right = right.sum(axis=-1)
    valid = (vals[:, :-1] < vals[:, 1:]) & (n_left >= min_samples_leaf) & (n_right >= min_samples_leaf)
    with np.errstate(divide="ignore", invalid="ignore"):
        score = (left * left).sum(axis=-1) / n_left + (right * right).sum(axis=-1) / n_right
    score = np.where(valid, score, -np.inf)
    return _pick(score, vals, features)


def best_split_gain(X, grad, hess, counts, order, features, lam, min_samples_leaf,
                    min_child_weight):
    """Best second-order split; returns ``(feature, threshold, gain)``.

    ``gain = 0.5 * (GL^2/(HL+lam) + GR^2/(HR+lam) - G^2/(H+lam))``.
    """
    features = np.asarray(features, dtype=np.intp)
    if len(features) == 0:
        return -1, 0.0, -np.inf
    rows = _node_sorted_rows(counts, order, features)
    if rows.shape[1] < 2:
        return -1, 0.0, -np.inf
    c = counts.astype(np.float64)
    gw = c * grad
    hw = c * hess
    G = np.cumsum(gw)[-1]
    H = np.cumsum(hw)[-1]
    vals = X[rows, features[:, None]]
    GL = np.cumsum(gw[rows], axis=1)[:, :-1]
    HL = np.cumsum(hw[rows], axis=1)[:, :-1]
    NL = np.cumsum(c[rows], axis=1)[:, :-1]
    NT = NL[:, -1:] + c[rows[:, -1:]]
    GR = G - GL
    HR = H - HL
    NR = NT - NL
    valid = ((vals[:, :-1] < vals[:, 1:]) & (NL >= min_samples_leaf) & (NR >= min_samples_leaf)
             & (HL >= min_child_weight) & (HR >= min_child_weight))
    with np.errstate(divide="ignore", invalid="ignore"):
        gain = 0.5 * (GL * GL / (HL + lam) + GR * GR / (HR + lam) - G * G / (H + lam))
    gain = np.where(valid, gain, -np.inf)
    return _pick(gain, vals, features)


def _pick(score, vals, features):
    # first max per feature = lowest threshold; first feature wins ties
    pos = np.argmax(score, axis=1)
    best_per_feature = score[np.arange(score.shape[0]), pos]
    fi = int(np.argmax(best_per_feature))
    best = float(best_per_feature[fi])
    if best == -np.inf:
        return -1, 0.0, -np.inf
    p = pos[fi]
    thr = float(_midpoints(vals[fi, p], vals[fi, p + 1]))
    return int(features[fi]), thr, best


def apply_tree(left, right, feature, threshold, X):
    """Leaf index reached by each row of ``X``."""
    n = X.shape[0]
    node = np.zeros(n, dtype=np.intp)
    active = np.arange(n)
    while active.size:
        cur = node[active]
        internal = left[cur] >= 0
        active = active[internal]
        cur = cur[internal]
        if not active.size:
            break
        goes_left = X[active, feature[cur]] < threshold[cur]
        node[active] = np.where(goes_left, left[cur], right[cur])
    return node


def _extend(path, zero, one, feat):
    depth = len(path)
    path.append([feat, zero, one, 1.0 if depth == 0 else 0.0])
    for i in range(depth - 1, -1, -1):
        path[i + 1][3] += one * path[i][3] * (i + 1) / (depth + 1)
        path[i][3] = zero * path[i][3] * (depth - i) / (depth + 1)


def _unwind(path, index):
    depth = len(path) - 1
    one = path[index][2]
    zero = path[index][1]
    nxt = path[depth][3]
    for i in range(depth - 1, -1, -1):
        if one != 0:
            tmp = path[i][3]
            path[i][3] = nxt * (depth + 1) / ((i + 1) * one)
            nxt = tmp - path[i][3] * zero * (depth - i) / (depth + 1)
        else:
            path[i][3] = path[i][3] * (depth + 1) / (zero * (depth - i))
    for i in range(index, depth):
        path[i][0:3] = path[i + 1][0:3]
    path.pop()


def _unwound_sum(path, index):
    depth = len(path) - 1
    one = path[index][2]
    zero = path[index][1]
    nxt = path[depth][3]
    total = 0.0
    for i in range(depth - 1, -1, -1):
        if one != 0:
            tmp = nxt * (depth + 1) / ((i + 1) * one)
            total += tmp
            nxt = path[i][3] - tmp * zero * ((depth - i) / (depth + 1))
        elif zero != 0:
            total += (path[i][3] / zero) / ((depth - i) / (depth + 1))
    return total


def _shap_one(left, right, feature, threshold, value, cover, x, phi):
    def recurse(node, path, zero, one, feat):
        path = [list(p) for p in path]
        _extend(path, zero, one, feat)
        if left[node] < 0:
            for i in range(1, len(path)):
                w = _unwound_sum(path, i)
                phi[path[i][0]] += w * (path[i][2] - path[i][1]) * value[node]
            return
        split = feature[node]
        if x[split] < threshold[node]:
            hot, cold = left[node], right[node]
        else:
            hot, cold = right[node], left[node]
        in_zero = in_one = 1.0
        for k in range(len(path)):
            if path[k][0] == split:
                in_zero, in_one = path[k][1], path[k][2]
                _unwind(path, k)
                break
        recurse(hot, path, cover[hot] / cover[node] * in_zero, in_one, split)
        recurse(cold, path, cover[cold] / cover[node] * in_zero, 0.0, split)

    recurse(0, [], 1.0, 1.0, -1)


def tree_shap(left, right, feature, threshold, value, cover, X, max_depth):
    """Path-dependent TreeSHAP for every row of ``X``.

    ``value`` has shape ``(n_nodes, V)``; the result has shape
    ``(n_rows, n_features, V)``. ``max_depth`` is unused here and kept for
    signature parity with the compiled kernel.
    """
    n, F = X.shape
    out = np.zeros((n, F, value.shape[1]))
    for r in range(n):
        _shap_one(left, right, feature, threshold, value, cover, X[r], out[r])
    return out
