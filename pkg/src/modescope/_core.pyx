# cython: language_level=3
"""Compiled subsection-scan kernels.

Every routine here has a numpy twin in ``_fallback.py`` that performs the
same floating point operations in the same order, so both backends return
bit-identical results.

Conventions shared by all kernels
---------------------------------
``a`` is a nondecreasing array of length ``m``.  A pair ``(j, k)`` with
``0 <= j < k <= m - 1`` and ``k - j >= 2`` spans the interior points
``j < l < k``.  Its spacing statistic is

    T(j, k) = sum_l beta((a[l] - a[j]) / (a[k] - a[j]))

evaluated as ``2 * D / den - cnt + tj - tk`` where ``D`` is the sum of
``a[l] - a[j]``, ``cnt = k - j - 1`` and ``tj``/``tk`` count interior points
tied with ``a[j]``/``a[k]`` (for which beta is zero rather than -1/+1).
``scale[s]`` and ``penalty[s]`` are indexed by the span ``s = k - j``.
Pairs with ``a[k] == a[j]`` are skipped.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, INFINITY

cnp.import_array()


cdef void _tie_runs(const double[::1] a, Py_ssize_t m, long[::1] right, long[::1] left) noexcept nogil:
    cdef Py_ssize_t i
    right[m - 1] = 0
    for i in range(m - 2, -1, -1):
        right[i] = right[i + 1] + 1 if a[i + 1] == a[i] else 0
    left[0] = 0
    for i in range(1, m):
        left[i] = left[i - 1] + 1 if a[i - 1] == a[i] else 0


cdef inline double _pair_stat(double D, double den, long cnt, long rj, long lk) noexcept nogil:
    cdef long tj = rj if rj < cnt else cnt
    cdef long tk = lk if lk < cnt else cnt
    return 2.0 * D / den - <double>cnt + <double>tj - <double>tk


cdef double _max_full(const double[::1] a, Py_ssize_t m, const double[::1] scale,
                      const double[::1] penalty, long[::1] right, long[::1] left,
                      long* bj, long* bk) noexcept nogil:
    cdef Py_ssize_t j, k
    cdef double D, den, T, z, best = -INFINITY
    cdef long cnt
    _tie_runs(a, m, right, left)
    for j in range(m - 2):
        D = 0.0
        for k in range(j + 2, m):
            D += a[k - 1] - a[j]
            den = a[k] - a[j]
            if den <= 0.0:
                continue
            cnt = k - j - 1
            T = _pair_stat(D, den, cnt, right[j], left[k])
            z = scale[k - j] * fabs(T) - penalty[k - j]
            if z > best:
                best = z
                bj[0] = j
                bk[0] = k
    return best


cdef double _max_spans(const double[::1] a, Py_ssize_t m, const double[::1] scale,
                       const double[::1] penalty, const long[::1] spans,
                       long[::1] right, long[::1] left, double[::1] prefix,
                       long* bj, long* bk) noexcept nogil:
    cdef Py_ssize_t i, j, k, s
    cdef double acc = 0.0, D, den, T, z, best = -INFINITY
    cdef long cnt
    _tie_runs(a, m, right, left)
    for i in range(m):
        acc += a[i]
        prefix[i] = acc
    for i in range(spans.shape[0]):
        s = spans[i]
        cnt = s - 1
        for j in range(m - s):
            k = j + s
            den = a[k] - a[j]
            if den <= 0.0:
                continue
            D = (prefix[k - 1] - prefix[j]) - <double>cnt * a[j]
            T = _pair_stat(D, den, cnt, right[j], left[k])
            z = scale[s] * fabs(T) - penalty[s]
            if z > best:
                best = z
                bj[0] = j
                bk[0] = k
    return best


def scan_max(const double[::1] a, const double[::1] scale, const double[::1] penalty,
             spans=None):
    """Return ``(zmax, j, k)`` over all pairs, or over ``spans`` when given."""
    cdef Py_ssize_t m = a.shape[0]
    cdef long bj = -1, bk = -1
    cdef double best
    cdef long[::1] right = np.empty(max(m, 1), dtype=np.int64)
    cdef long[::1] left = np.empty(max(m, 1), dtype=np.int64)
    cdef double[::1] prefix
    cdef const long[::1] sp
    if m < 3:
        return -np.inf, -1, -1
    if spans is None:
        with nogil:
            best = _max_full(a, m, scale, penalty, right, left, &bj, &bk)
    else:
        sp = np.ascontiguousarray(spans, dtype=np.int64)
        prefix = np.empty(m, dtype=np.float64)
        with nogil:
            best = _max_spans(a, m, scale, penalty, sp, right, left, prefix, &bj, &bk)
    return best, bj, bk


def scan_max_rows(const double[:, ::1] A, const double[::1] scale,
                  const double[::1] penalty, spans=None):
    """Row-wise ``scan_max`` maxima for a batch of equally long arrays."""
    cdef Py_ssize_t r, nrows = A.shape[0], m = A.shape[1]
    cdef long bj, bk
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out_arr = np.full(nrows, -np.inf)
    cdef double[::1] out = out_arr
    cdef long[::1] right = np.empty(max(m, 1), dtype=np.int64)
    cdef long[::1] left = np.empty(max(m, 1), dtype=np.int64)
    cdef double[::1] prefix = np.empty(max(m, 1), dtype=np.float64)
    cdef const long[::1] sp
    if m < 3:
        return out_arr
    if spans is None:
        with nogil:
            for r in range(nrows):
                out[r] = _max_full(A[r], m, scale, penalty, right, left, &bj, &bk)
    else:
        sp = np.ascontiguousarray(spans, dtype=np.int64)
        with nogil:
            for r in range(nrows):
                out[r] = _max_spans(A[r], m, scale, penalty, sp, right, left, prefix, &bj, &bk)
    return out_arr


def scan_exceed(const double[::1] a, const double[::1] scale, const double[::1] penalty,
                double level, spans=None):
    """Return ``(j, k, T)`` arrays for every pair with normalized value > ``level``."""
    cdef Py_ssize_t m = a.shape[0], i, j, k, s, n_out = 0, cap = 64
    cdef double D, den, T, acc = 0.0
    cdef long cnt
    cdef long[::1] right = np.empty(max(m, 1), dtype=np.int64)
    cdef long[::1] left = np.empty(max(m, 1), dtype=np.int64)
    cdef double[::1] prefix = np.empty(max(m, 1), dtype=np.float64)
    cdef const long[::1] sp
    js = np.empty(cap, dtype=np.int64)
    ks = np.empty(cap, dtype=np.int64)
    ts = np.empty(cap, dtype=np.float64)
    cdef long[::1] jv = js
    cdef long[::1] kv = ks
    cdef double[::1] tv = ts
    if m < 3:
        return js[:0], ks[:0], ts[:0]
    _tie_runs(a, m, right, left)
    if spans is None:
        for j in range(m - 2):
            D = 0.0
            for k in range(j + 2, m):
                D += a[k - 1] - a[j]
                den = a[k] - a[j]
                if den <= 0.0:
                    continue
                cnt = k - j - 1
                T = _pair_stat(D, den, cnt, right[j], left[k])
                if scale[k - j] * fabs(T) - penalty[k - j] > level:
                    if n_out == cap:
                        cap *= 2
                        js = np.resize(js, cap); ks = np.resize(ks, cap); ts = np.resize(ts, cap)
                        jv = js; kv = ks; tv = ts
                    jv[n_out] = j; kv[n_out] = k; tv[n_out] = T
                    n_out += 1
    else:
        sp = np.ascontiguousarray(spans, dtype=np.int64)
        for i in range(m):
            acc += a[i]
            prefix[i] = acc
        for i in range(sp.shape[0]):
            s = sp[i]
            cnt = s - 1
            for j in range(m - s):
                k = j + s
                den = a[k] - a[j]
                if den <= 0.0:
                    continue
                D = (prefix[k - 1] - prefix[j]) - <double>cnt * a[j]
                T = _pair_stat(D, den, cnt, right[j], left[k])
                if scale[s] * fabs(T) - penalty[s] > level:
                    if n_out == cap:
                        cap *= 2
                        js = np.resize(js, cap); ks = np.resize(ks, cap); ts = np.resize(ts, cap)
                        jv = js; kv = ks; tv = ts
                    jv[n_out] = j; kv[n_out] = k; tv[n_out] = T
                    n_out += 1
    return js[:n_out].copy(), ks[:n_out].copy(), ts[:n_out].copy()
