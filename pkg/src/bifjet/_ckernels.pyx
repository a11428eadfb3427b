# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled contraction kernels for symmetric multilinear forms.

A symmetric beta-linear form is stored as a list of sorted index tuples
``idx`` (ntuples x beta), one codomain vector per tuple in ``coeffs``
(ntuples x m) and the weight ``scale[t] = 1 / prod(mult!)``.  Evaluating the
form on the rows of ``V`` (beta x n) is a sum of permanents of the
beta x beta submatrices ``V[:, idx[t]]``, computed with Ryser's formula in
Gray-code order.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

DEF MAXB = 24


cdef double _ryser(const double[:, ::1] V, const long[::1] cols, int b, int skip) noexcept nogil:
    """Permanent of V[:, cols] with column ``skip`` removed (skip < 0 keeps all).

    Only the first ``b`` rows of V are used; b must equal the number of
    retained columns.
    """
    cdef double rowsum[MAXB]
    cdef long colmap[MAXB]
    cdef int ncol = 0
    cdef int j, r, bit
    cdef unsigned long g, gray, prev, nsub, diff
    cdef double prod, total = 0.0
    cdef int parity
    if b == 0:
        return 1.0
    for j in range(b + (1 if skip >= 0 else 0)):
        if j != skip:
            colmap[ncol] = cols[j]
            ncol += 1
    for r in range(b):
        rowsum[r] = 0.0
    nsub = 1UL << b
    prev = 0
    for g in range(1, nsub):
        gray = g ^ (g >> 1)
        diff = gray ^ prev
        bit = 0
        while not (diff >> bit) & 1UL:
            bit += 1
        if gray & diff:
            for r in range(b):
                rowsum[r] += V[r, colmap[bit]]
        else:
            for r in range(b):
                rowsum[r] -= V[r, colmap[bit]]
        prev = gray
        prod = 1.0
        for r in range(b):
            prod *= rowsum[r]
        parity = 0
        diff = gray
        while diff:
            parity ^= 1
            diff &= diff - 1
        if parity:
            total -= prod
        else:
            total += prod
    if b & 1:
        total = -total
    return total


def contract(long[:, ::1] idx, double[:, ::1] coeffs, double[::1] scale, double[:, ::1] V):
    """Evaluate the stored form on the rows of V; returns a length-m vector."""
    cdef Py_ssize_t nt = idx.shape[0]
    cdef int b = idx.shape[1]
    cdef Py_ssize_t m = coeffs.shape[1]
    cdef Py_ssize_t t, c
    cdef double w
    if b > MAXB:
        raise ValueError("tensor order exceeds compiled kernel limit")
    if V.shape[0] != b:
        raise ValueError("argument count does not match tensor order")
    out = np.zeros(m)
    cdef double[::1] o = out
    with nogil:
        for t in range(nt):
            w = scale[t] * _ryser(V, idx[t], b, -1)
            if w != 0.0:
                for c in range(m):
                    o[c] += w * coeffs[t, c]
    return out


def contract_free(long[:, ::1] idx, double[:, ::1] coeffs, double[::1] scale, double[:, ::1] V, Py_ssize_t n):
    """Evaluate with the last argument left free; returns the m x n matrix.

    V holds the beta - 1 fixed arguments as rows.
    """
    cdef Py_ssize_t nt = idx.shape[0]
    cdef int b = idx.shape[1]
    cdef Py_ssize_t m = coeffs.shape[1]
    cdef Py_ssize_t t, c, col
    cdef int l
    cdef double w
    if b > MAXB:
        raise ValueError("tensor order exceeds compiled kernel limit")
    if V.shape[0] != b - 1:
        raise ValueError("argument count does not match tensor order")
    out = np.zeros((m, n))
    cdef double[:, ::1] o = out
    with nogil:
        for t in range(nt):
            for l in range(b):
                w = scale[t] * _ryser(V, idx[t], b - 1, l)
                if w != 0.0:
                    col = idx[t, l]
                    for c in range(m):
                        o[c, col] += w * coeffs[t, c]
    return out
