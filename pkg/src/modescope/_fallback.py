"""Pure numpy twin of the compiled kernels in ``_core.pyx``.

Same signatures, same floating point operation order; see the module
docstring of ``_core.pyx`` for the pair conventions.
"""
import numpy as np


def _tie_runs(a):
    m = a.shape[0]
    eq = a[1:] == a[:-1]
    right = np.zeros(m, dtype=np.int64)
    left = np.zeros(m, dtype=np.int64)
    for i in range(m - 2, -1, -1):
        if eq[i]:
            right[i] = right[i + 1] + 1
    for i in range(1, m):
        if eq[i - 1]:
            left[i] = left[i - 1] + 1
    return right, left


def _pair_stat(D, den, cnt, rj, lk):
    tj = np.minimum(rj, cnt)
    tk = np.minimum(lk, cnt)
    with np.errstate(divide="ignore", invalid="ignore"):
        return 2.0 * D / den - cnt.astype(np.float64) + tj.astype(np.float64) - tk.astype(np.float64)


def _all_pairs(a):
    """Statistic matrix ``T[j, k]`` (NaN where undefined) for every pair."""
    m = a.shape[0]
    right, left = _tie_runs(a)
    diff = a[None, :] - a[:, None]
    # D[j, k] = sum_{j<l<k} (a[l] - a[j]) accumulated left to right
    inner = np.triu(diff, 1)
    D = np.zeros((m, m))
    D[:, 1:] = np.cumsum(inner, axis=1)[:, :-1]
    jj, kk = np.meshgrid(np.arange(m), np.arange(m), indexing="ij")
    cnt = kk - jj - 1
    valid = (cnt >= 1) & (diff > 0.0)
    T = np.full((m, m), np.nan)
    T[valid] = _pair_stat(D[valid], diff[valid], cnt[valid], right[jj[valid]], left[kk[valid]])
    return T


def _span_pairs(a, spans):
    m = a.shape[0]
    right, left = _tie_runs(a)
    prefix = np.cumsum(a)
    out_j, out_k, out_t = [], [], []
    for s in spans:
        s = int(s)
        if s >= m:
            continue
        j = np.arange(m - s)
        k = j + s
        den = a[k] - a[j]
        ok = den > 0.0
        j, k, den = j[ok], k[ok], den[ok]
        cnt = np.full(j.shape, s - 1, dtype=np.int64)
        D = (prefix[k - 1] - prefix[j]) - float(s - 1) * a[j]
        out_j.append(j)
        out_k.append(k)
        out_t.append(_pair_stat(D, den, cnt, right[j], left[k]))
    if not out_j:
        return np.empty(0, np.int64), np.empty(0, np.int64), np.empty(0)
    return np.concatenate(out_j), np.concatenate(out_k), np.concatenate(out_t)


def _normalized(T, span, scale, penalty):
    return scale[span] * np.abs(T) - penalty[span]


def scan_max(a, scale, penalty, spans=None):
    a = np.ascontiguousarray(a, dtype=np.float64)
    m = a.shape[0]
    if m < 3:
        return -np.inf, -1, -1
    if spans is None:
        T = _all_pairs(a)
        jj, kk = np.nonzero(~np.isnan(T))
        if jj.size == 0:
            return -np.inf, -1, -1
        t = T[jj, kk]
    else:
        jj, kk, t = _span_pairs(a, spans)
        if jj.size == 0:
            return -np.inf, -1, -1
    z = _normalized(t, kk - jj, np.asarray(scale), np.asarray(penalty))
    # first maximum in the kernel's enumeration order
    i = int(np.argmax(z))
    return float(z[i]), int(jj[i]), int(kk[i])


def scan_max_rows(A, scale, penalty, spans=None):
    A = np.ascontiguousarray(A, dtype=np.float64)
    out = np.full(A.shape[0], -np.inf)
    for r in range(A.shape[0]):
        out[r] = scan_max(A[r], scale, penalty, spans)[0]
    return out


def scan_exceed(a, scale, penalty, level, spans=None):
    a = np.ascontiguousarray(a, dtype=np.float64)
    if a.shape[0] < 3:
        e = np.empty(0, np.int64)
        return e, e.copy(), np.empty(0)
    if spans is None:
        T = _all_pairs(a)
        jj, kk = np.nonzero(~np.isnan(T))
        t = T[jj, kk]
    else:
        jj, kk, t = _span_pairs(a, spans)
    z = _normalized(t, kk - jj, np.asarray(scale), np.asarray(penalty))
    keep = z > level
    return jj[keep].astype(np.int64), kk[keep].astype(np.int64), t[keep]
