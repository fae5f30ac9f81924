# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels; same signatures and semantics as ``_kernels_py``."""

import numpy as np

from libc.math cimport sqrt
from libc.stdlib cimport malloc, free
from scipy.linalg.cython_lapack cimport dgesvd, dgelsd

cdef double DBL_EPS = 2.220446049250313e-16


cdef bint _next_combination(int *idx, int k, int n) noexcept nogil:
    cdef int i = k - 1
    while i >= 0 and idx[i] == n - k + i:
        i -= 1
    if i < 0:
        return False
    idx[i] += 1
    i += 1
    while i < k:
        idx[i] = idx[i - 1] + 1
        i += 1
    return True


cdef void _gather(const double[:, ::1] a, const int *idx, int k, double *buf) noexcept nogil:
    # column-major copy of the selected columns for LAPACK
    cdef int m = a.shape[0]
    cdef int r, c, j
    for c in range(k):
        j = idx[c]
        for r in range(m):
            buf[c * m + r] = a[r, j]


cdef inline void _sift_down(double *h, int start, int end) noexcept nogil:
    # min-heap on h[0:end]
    cdef int root = start, child
    cdef double tmp
    while True:
        child = 2 * root + 1
        if child >= end:
            return
        if child + 1 < end and h[child + 1] < h[child]:
            child += 1
        if h[child] < h[root]:
            tmp = h[root]
            h[root] = h[child]
            h[child] = tmp
            root = child
        else:
            return


def topk_prefix_max(values, int depth):
    cdef const double[:, ::1] v = np.ascontiguousarray(values, dtype=np.float64)
    cdef int rows = v.shape[0]
    cdef int cols = v.shape[1]
    if depth < 0 or depth > cols:
        raise ValueError(f"depth {depth} outside [0, {cols}]")
    out = np.zeros(depth)
    if depth == 0 or rows == 0:
        return out
    cdef double[::1] best = out
    cdef double *h = <double *>malloc(depth * sizeof(double))
    cdef int i, t, end
    cdef double acc, x, tmp
    if h == NULL:
        raise MemoryError()
    try:
        with nogil:
            for t in range(depth):
                best[t] = -1.0
            for i in range(rows):
                # keep the depth largest entries in a min-heap
                for t in range(depth):
                    h[t] = v[i, t]
                for t in range(depth // 2 - 1, -1, -1):
                    _sift_down(h, t, depth)
                for t in range(depth, cols):
                    x = v[i, t]
                    if x > h[0]:
                        h[0] = x
                        _sift_down(h, 0, depth)
                # in-place heapsort leaves h in descending order
                for end in range(depth - 1, 0, -1):
                    tmp = h[0]
                    h[0] = h[end]
                    h[end] = tmp
                    _sift_down(h, 0, end)
                acc = 0.0
                for t in range(depth):
                    acc = acc + h[t]
                    if acc > best[t]:
                        best[t] = acc
    finally:
        free(h)
    return out


def first_dependent_subset(a, int k, double rank_tol, long long budget):
    cdef const double[:, ::1] av = np.ascontiguousarray(a, dtype=np.float64)
    cdef int m = av.shape[0]
    cdef int n = av.shape[1]
    cdef long long examined = 0
    cdef int i, info = 0, lwork = -1, one = 1, kk = k, mm = m
    cdef int ns = m if m < k else k
    cdef double wq = 0.0
    cdef double dummy = 0.0
    cdef char jobn = b'N'
    cdef bint dependent = False
    if k < 1 or k > n:
        return None, 0, True
    if k > m:
        # more columns than rows: the very first subset is already dependent
        if budget < 1:
            return None, 0, False
        return tuple(range(k)), 1, True

    cdef int *idx = <int *>malloc(k * sizeof(int))
    cdef double *buf = <double *>malloc(m * k * sizeof(double))
    cdef double *s = <double *>malloc(ns * sizeof(double))
    cdef double *work = NULL
    if idx == NULL or buf == NULL or s == NULL:
        free(idx); free(buf); free(s)
        raise MemoryError()
    try:
        for i in range(k):
            idx[i] = i
        dgesvd(&jobn, &jobn, &mm, &kk, buf, &mm, s, &dummy, &one, &dummy, &one, &wq, &lwork, &info)
        lwork = <int>wq + 1
        work = <double *>malloc(lwork * sizeof(double))
        if work == NULL:
            raise MemoryError()
        while True:
            if examined >= budget:
                return None, examined, False
            examined += 1
            _gather(av, idx, k, buf)
            dgesvd(&jobn, &jobn, &mm, &kk, buf, &mm, s, &dummy, &one, &dummy, &one, work, &lwork, &info)
            if info != 0:
                raise ArithmeticError(f"dgesvd failed with info={info}")
            if s[0] == 0.0 or s[ns - 1] <= rank_tol * s[0]:
                dependent = True
                break
            if not _next_combination(idx, k, n):
                break
        if dependent:
            return tuple(idx[i] for i in range(k)), examined, True
        return None, examined, True
    finally:
        free(idx); free(buf); free(s); free(work)


def fitting_subsets(a, b, int k, double fit_tol, long long budget):
    cdef const double[:, ::1] av = np.ascontiguousarray(a, dtype=np.float64)
    cdef const double[::1] bv = np.ascontiguousarray(b, dtype=np.float64)
    cdef int m = av.shape[0]
    cdef int n = av.shape[1]
    cdef long long examined = 0
    found = []
    if k < 1 or k > n:
        return found, 0, True

    cdef int mm = m, kk = k, one = 1, info = 0, rank = 0, lwork = -1
    cdef int ldb = m if m > k else k
    cdef int ns = m if m < k else k
    cdef double rcond = DBL_EPS * (m if m > k else k)
    cdef double wq = 0.0, resid, acc
    cdef int iwq = 0, liwork
    cdef int i, r, c
    cdef int *idx = <int *>malloc(k * sizeof(int))
    cdef double *buf = <double *>malloc(m * k * sizeof(double))
    cdef double *rhs = <double *>malloc(ldb * sizeof(double))
    cdef double *s = <double *>malloc(ns * sizeof(double))
    cdef double *work = NULL
    cdef int *iwork = NULL
    if idx == NULL or buf == NULL or rhs == NULL or s == NULL:
        free(idx); free(buf); free(rhs); free(s)
        raise MemoryError()
    try:
        for i in range(k):
            idx[i] = i
        dgelsd(&mm, &kk, &one, buf, &mm, rhs, &ldb, s, &rcond, &rank, &wq, &lwork, &iwq, &info)
        lwork = <int>wq + 1
        liwork = iwq if iwq > 1 else 1
        work = <double *>malloc(lwork * sizeof(double))
        iwork = <int *>malloc(liwork * sizeof(int))
        if work == NULL or iwork == NULL:
            raise MemoryError()
        while True:
            if examined >= budget:
                return found, examined, False
            examined += 1
            _gather(av, idx, k, buf)
            for r in range(m):
                rhs[r] = bv[r]
            dgelsd(&mm, &kk, &one, buf, &mm, rhs, &ldb, s, &rcond, &rank, work, &lwork, iwork, &info)
            if info != 0:
                raise ArithmeticError(f"dgelsd failed with info={info}")
            # dgelsd overwrote buf; residual is recomputed from the original columns
            resid = 0.0
            for r in range(m):
                acc = bv[r]
                for c in range(k):
                    acc = acc - av[r, idx[c]] * rhs[c]
                resid = resid + acc * acc
            if sqrt(resid) <= fit_tol:
                found.append(tuple(idx[i] for i in range(k)))
            if not _next_combination(idx, k, n):
                break
        return found, examined, True
    finally:
        free(idx); free(buf); free(rhs); free(s); free(work); free(iwork)
