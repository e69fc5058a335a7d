# cython: language_level=3
"""Compiled twins of the kernels in ``_pykernels``; identical semantics."""

import numpy as np
cimport numpy as cnp
from libc.stdlib cimport malloc, free

cnp.import_array()


def sample_outcomes(probs, u):
    cdef double[:, ::1] p = np.ascontiguousarray(probs, dtype=np.float64)
    cdef double[::1] uu = np.ascontiguousarray(u, dtype=np.float64)
    cdef Py_ssize_t n = p.shape[0], k = p.shape[1], i, j
    out_arr = np.empty(n, dtype=np.int64)
    cdef long long[::1] out = out_arr
    cdef double cum
    for i in range(n):
        cum = 0.0
        out[i] = k
        for j in range(k):
            cum = cum + p[i, j]
            if uu[i] < cum:
                out[i] = j
                break
        if out[i] == k:
            for j in range(k - 1, -1, -1):
                if p[i, j] > 0.0:
                    out[i] = j
                    break
    return out_arr


def channel_error_counts(table, z, y, u):
    cdef double[:, ::1] t = np.ascontiguousarray(table, dtype=np.float64)
    cdef long long[::1] zz = np.ascontiguousarray(z, dtype=np.int64)
    cdef long long[::1] yy = np.ascontiguousarray(y, dtype=np.int64)
    cdef double[:, ::1] uu = np.ascontiguousarray(u, dtype=np.float64)
    cdef Py_ssize_t m = t.shape[0], n = zz.shape[0], i, j
    out_arr = np.zeros(m, dtype=np.int64)
    cdef long long[::1] out = out_arr
    cdef long long c, ans
    with nogil:
        for i in range(m):
            c = 0
            for j in range(n):
                ans = 1 if uu[i, j] < t[i, zz[j]] else 0
                if ans != (yy[j] != 0):
                    c += 1
            out[i] = c
    return out_arr


cdef struct Search:
    Py_ssize_t m
    Py_ssize_t k
    Py_ssize_t G
    double *F          # m x k, row-major
    double *grid
    double gamma
    double tol
    unsigned char *valid   # (k+1) x m
    long long *pattern     # (k+1) x m
    long long *seen        # 2^k stamps
    long long stamp
    long long *choice


cdef bint _rec(Search *s, Py_ssize_t depth) nogil:
    cdef Py_ssize_t m = s.m, i, g
    cdef long long need, distinct, bit
    cdef double r, v
    cdef unsigned char *cv
    cdef unsigned char *nv
    cdef long long *cp
    cdef long long *np_
    cdef long long nvalid
    cdef bint a, b
    if depth == s.k:
        return True
    cv = s.valid + depth * m
    cp = s.pattern + depth * m
    nv = s.valid + (depth + 1) * m
    np_ = s.pattern + (depth + 1) * m
    need = (<long long>1) << (depth + 1)
    bit = (<long long>1) << depth
    for g in range(s.G):
        r = s.grid[g]
        nvalid = 0
        for i in range(m):
            if cv[i]:
                v = s.F[i * s.k + depth]
                a = v >= r + s.gamma - s.tol
                b = v <= r - s.gamma + s.tol
                if a or b:
                    nv[i] = 1
                    np_[i] = cp[i] | (bit if a else 0)
                    nvalid += 1
                else:
                    nv[i] = 0
            else:
                nv[i] = 0
        if nvalid < need:
            continue
        s.stamp += 1
        distinct = 0
        for i in range(m):
            if nv[i] and s.seen[np_[i]] != s.stamp:
                s.seen[np_[i]] = s.stamp
                distinct += 1
        if distinct < need:
            continue
        s.choice[depth] = g
        if _rec(s, depth + 1):
            return True
    s.choice[depth] = -1
    return False


def shatter_search(F, grid, gamma, tol):
    cdef double[:, ::1] FF = np.ascontiguousarray(F, dtype=np.float64)
    cdef double[::1] gg = np.ascontiguousarray(grid, dtype=np.float64)
    cdef Py_ssize_t m = FF.shape[0], k = FF.shape[1], i
    choice_arr = np.full(k, -1, dtype=np.int64)
    realizers = np.full(1 << k, -1, dtype=np.int64)
    cdef long long[::1] ch = choice_arr
    cdef Search s
    cdef bint found
    s.m = m
    s.k = k
    s.G = gg.shape[0]
    s.F = &FF[0, 0] if m > 0 and k > 0 else NULL
    s.grid = &gg[0] if s.G > 0 else NULL
    s.gamma = gamma
    s.tol = tol
    s.stamp = 0
    s.choice = &ch[0] if k > 0 else NULL
    s.valid = <unsigned char *>malloc((k + 1) * m * sizeof(unsigned char) + 1)
    s.pattern = <long long *>malloc((k + 1) * m * sizeof(long long) + 8)
    s.seen = <long long *>malloc(((<long long>1) << k) * sizeof(long long))
    if s.valid == NULL or s.pattern == NULL or s.seen == NULL:
        free(s.valid); free(s.pattern); free(s.seen)
        raise MemoryError()
    try:
        for i in range(m):
            s.valid[i] = 1
            s.pattern[i] = 0
        for i in range((<long long>1) << k):
            s.seen[i] = 0
        if k == 0:
            found = True
        elif m == 0 or s.G == 0:
            found = False
        else:
            with nogil:
                found = _rec(&s, 0)
        if found:
            for i in range(m - 1, -1, -1):
                if s.valid[k * m + i]:
                    realizers[s.pattern[k * m + i]] = i
    finally:
        free(s.valid)
        free(s.pattern)
        free(s.seen)
    return bool(found), choice_arr, realizers
