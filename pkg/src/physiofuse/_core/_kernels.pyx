# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled tree kernels. Signatures and results mirror ``_kernels_py``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport INFINITY
from libc.stdlib cimport malloc, free

cnp.import_array()

ctypedef cnp.intp_t intp


cdef inline double _midpoint(double lo, double hi) noexcept nogil:
    cdef double thr = 0.5 * (lo + hi)
    if thr > lo:
        return thr
    return hi


def best_split_gini(const double[:, ::1] X, const intp[::1] y, const intp[::1] counts,
                    const intp[:, ::1] order, features, Py_ssize_t n_classes,
                    Py_ssize_t min_samples_leaf):
    cdef intp[::1] feats = np.ascontiguousarray(features, dtype=np.intp)
    cdef Py_ssize_t n = X.shape[0]
    cdef Py_ssize_t nf = feats.shape[0]
    cdef double[::1] total = np.zeros(n_classes)
    cdef double[::1] left = np.zeros(n_classes)
    cdef Py_ssize_t i, k, fi, f, r, prev_r
    cdef double n_total = 0.0, n_left, n_right, sl, sr, cr, score
    cdef double best = -INFINITY, best_thr = 0.0, v_prev, v
    cdef Py_ssize_t best_f = -1
    cdef bint have_prev
    if nf == 0:
        return -1, 0.0, -np.inf
    with nogil:
        for r in range(n):
            if counts[r] > 0:
                total[y[r]] += <double>counts[r]
                n_total += <double>counts[r]
        for fi in range(nf):
            f = feats[fi]
            for k in range(n_classes):
                left[k] = 0.0
            n_left = 0.0
            have_prev = False
            prev_r = -1
            for i in range(n):
                r = order[f, i]
                if counts[r] <= 0:
                    continue
                v = X[r, f]
                if have_prev:
                    v_prev = X[prev_r, f]
                    n_right = n_total - n_left
                    if v_prev < v and n_left >= min_samples_leaf and n_right >= min_samples_leaf:
                        sl = 0.0
                        sr = 0.0
                        for k in range(n_classes):
                            sl = sl + left[k] * left[k]
                            cr = total[k] - left[k]
                            sr = sr + cr * cr
                        score = sl / n_left + sr / n_right
                        if score > best:
                            best = score
                            best_f = f
                            best_thr = _midpoint(v_prev, v)
                left[y[r]] += <double>counts[r]
                n_left += <double>counts[r]
                prev_r = r
                have_prev = True
    if best_f < 0:
        return -1, 0.0, -np.inf
    return int(best_f), best_thr, best


def best_split_gain(const double[:, ::1] X, const double[::1] grad, const double[::1] hess,
                    const intp[::1] counts, const intp[:, ::1] order, features,
                    double lam, Py_ssize_t min_samples_leaf, double min_child_weight):
    cdef intp[::1] feats = np.ascontiguousarray(features, dtype=np.intp)
    cdef Py_ssize_t n = X.shape[0]
    cdef Py_ssize_t nf = feats.shape[0]
    cdef Py_ssize_t i, fi, f, r, prev_r
    cdef double G = 0.0, H = 0.0, N = 0.0, c
    cdef double GL, HL, NL, GR, HR, NR, gain, v, v_prev
    cdef double best = -INFINITY, best_thr = 0.0
    cdef Py_ssize_t best_f = -1
    cdef bint have_prev
    if nf == 0:
        return -1, 0.0, -np.inf
    with nogil:
        for r in range(n):
            if counts[r] > 0:
                c = <double>counts[r]
                G = G + c * grad[r]
                H = H + c * hess[r]
                N = N + c
        for fi in range(nf):
            f = feats[fi]
            GL = 0.0
            HL = 0.0
            NL = 0.0
            have_prev = False
            prev_r = -1
            for i in range(n):
                r = order[f, i]
                if counts[r] <= 0:
                    continue
                v = X[r, f]
                if have_prev:
                    v_prev = X[prev_r, f]
                    GR = G - GL
                    HR = H - HL
                    NR = N - NL
                    if (v_prev < v and NL >= min_samples_leaf and NR >= min_samples_leaf
                            and HL >= min_child_weight and HR >= min_child_weight):
                        gain = 0.5 * (GL * GL / (HL + lam) + GR * GR / (HR + lam) - G * G / (H + lam))
                        if gain > best:
                            best = gain
                            best_f = f
                            best_thr = _midpoint(v_prev, v)
                c = <double>counts[r]
                GL = GL + c * grad[r]
                HL = HL + c * hess[r]
                NL = NL + c
                prev_r = r
                have_prev = True
    if best_f < 0:
        return -1, 0.0, -np.inf
    return int(best_f), best_thr, best


def apply_tree(const intp[::1] left, const intp[::1] right, const intp[::1] feature,
               const double[::1] threshold, const double[:, ::1] X):
    cdef Py_ssize_t n = X.shape[0]
    out = np.zeros(n, dtype=np.intp)
    cdef intp[::1] node = out
    cdef Py_ssize_t i, j
    with nogil:
        for i in range(n):
            j = 0
            while left[j] >= 0:
                if X[i, feature[j]] < threshold[j]:
                    j = left[j]
                else:
                    j = right[j]
            node[i] = j
    return out


# --- TreeSHAP -----------------------------------------------------------------

cdef struct PathElem:
    Py_ssize_t feature
    double zero
    double one
    double pweight


cdef inline void _extend(PathElem* path, Py_ssize_t depth, double zero, double one,
                         Py_ssize_t feat) noexcept nogil:
    cdef Py_ssize_t i
    path[depth].feature = feat
    path[depth].zero = zero
    path[depth].one = one
    path[depth].pweight = 1.0 if depth == 0 else 0.0
    i = depth - 1
    while i >= 0:
        path[i + 1].pweight += one * path[i].pweight * (i + 1) / <double>(depth + 1)
        path[i].pweight = zero * path[i].pweight * (depth - i) / <double>(depth + 1)
        i -= 1


cdef inline void _unwind(PathElem* path, Py_ssize_t depth, Py_ssize_t index) noexcept nogil:
    cdef double one = path[index].one
    cdef double zero = path[index].zero
    cdef double nxt = path[depth].pweight
    cdef double tmp
    cdef Py_ssize_t i = depth - 1
    while i >= 0:
        if one != 0:
            tmp = path[i].pweight
            path[i].pweight = nxt * (depth + 1) / <double>((i + 1) * one)
            nxt = tmp - path[i].pweight * zero * (depth - i) / <double>(depth + 1)
        else:
            path[i].pweight = path[i].pweight * (depth + 1) / <double>(zero * (depth - i))
        i -= 1
    for i in range(index, depth):
        path[i].feature = path[i + 1].feature
        path[i].zero = path[i + 1].zero
        path[i].one = path[i + 1].one


cdef inline double _unwound_sum(PathElem* path, Py_ssize_t depth, Py_ssize_t index) noexcept nogil:
    cdef double one = path[index].one
    cdef double zero = path[index].zero
    cdef double nxt = path[depth].pweight
    cdef double total = 0.0, tmp
    cdef Py_ssize_t i = depth - 1
    while i >= 0:
        if one != 0:
            tmp = nxt * (depth + 1) / <double>((i + 1) * one)
            total += tmp
            nxt = path[i].pweight - tmp * zero * ((depth - i) / <double>(depth + 1))
        elif zero != 0:
            total += (path[i].pweight / zero) / ((depth - i) / <double>(depth + 1))
        i -= 1
    return total


cdef void _recurse(const intp[::1] left, const intp[::1] right, const intp[::1] feature,
                   const double[::1] threshold, const double[:, ::1] value,
                   const double[::1] cover, const double[::1] x, double[:, ::1] phi,
                   Py_ssize_t node, Py_ssize_t depth, PathElem* parent,
                   double zero, double one, Py_ssize_t feat) noexcept nogil:
    cdef PathElem* path = parent + depth + 1
    cdef Py_ssize_t i, k, v, split, hot, cold
    cdef double w, scale, in_zero = 1.0, in_one = 1.0
    for i in range(depth + 1):
        path[i] = parent[i]
    _extend(path, depth, zero, one, feat)
    if left[node] < 0:
        for i in range(1, depth + 1):
            w = _unwound_sum(path, depth, i)
            scale = w * (path[i].one - path[i].zero)
            for v in range(value.shape[1]):
                phi[path[i].feature, v] += scale * value[node, v]
        return
    split = feature[node]
    if x[split] < threshold[node]:
        hot = left[node]
        cold = right[node]
    else:
        hot = right[node]
        cold = left[node]
    k = 0
    while k <= depth:
        if path[k].feature == split:
            break
        k += 1
    if k != depth + 1:
        in_zero = path[k].zero
        in_one = path[k].one
        _unwind(path, depth, k)
        depth -= 1
    _recurse(left, right, feature, threshold, value, cover, x, phi, hot, depth + 1, path,
             cover[hot] / cover[node] * in_zero, in_one, split)
    _recurse(left, right, feature, threshold, value, cover, x, phi, cold, depth + 1, path,
             cover[cold] / cover[node] * in_zero, 0.0, split)


def tree_shap(const intp[::1] left, const intp[::1] right, const intp[::1] feature,
              const double[::1] threshold, const double[:, ::1] value, const double[::1] cover,
              const double[:, ::1] X, Py_ssize_t max_depth):
    cdef Py_ssize_t n = X.shape[0]
    cdef Py_ssize_t F = X.shape[1]
    out = np.zeros((n, F, value.shape[1]))
    cdef double[:, :, ::1] phi = out
    cdef Py_ssize_t r
    cdef Py_ssize_t size = (max_depth + 2) * (max_depth + 3) // 2 + 1
    cdef PathElem* buf = <PathElem*>malloc(size * sizeof(PathElem))
    if buf == NULL:
        raise MemoryError()
    try:
        with nogil:
            for r in range(n):
                _recurse(left, right, feature, threshold, value, cover, X[r], phi[r],
                         0, 0, buf, 1.0, 1.0, -1)
    finally:
        free(buf)
    return out
