# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops: per-slot knapsack, Max-Weight trace execution, Markov walks.

Every routine here has a line-for-line twin in ``_purepy.py``; results must
agree bit-for-bit (same float operations in the same order).
"""

import numpy as np

from libc.stdlib cimport malloc, free
from libc.string cimport memset

ctypedef long long i64


cdef void _knapsack(const double* values, const i64* weights, Py_ssize_t n,
                    i64 capacity, double* best, unsigned char* keep,
                    unsigned char* out) noexcept nogil:
    # Suffix DP: best[c] after processing item i is the optimum over items
    # i..n-1 with capacity c. Ties prefer taking, so reconstruction from item 0
    # yields the lexicographically first optimal selection.
    cdef Py_ssize_t i, c
    cdef i64 w, total = 0, cap
    cdef double t
    for i in range(n):
        out[i] = 0
        total += weights[i]
    if total <= capacity:
        for i in range(n):
            out[i] = 1
        return
    cap = capacity
    for c in range(cap + 1):
        best[c] = 0.0
    memset(keep, 0, n * (cap + 1))
    i = n - 1
    while i >= 0:
        w = weights[i]
        c = cap
        while c >= w:
            t = values[i] + best[c - w]
            if t >= best[c]:
                best[c] = t
                keep[i * (cap + 1) + c] = 1
            c -= 1
        i -= 1
    c = cap
    for i in range(n):
        if keep[i * (cap + 1) + c]:
            out[i] = 1
            c -= weights[i]


def knapsack(const double[::1] values, const i64[::1] weights, i64 capacity):
    """Exact 0/1 knapsack; returns a uint8 selection mask."""
    cdef Py_ssize_t n = values.shape[0]
    cdef i64 cap = capacity if capacity > 0 else 0
    cdef i64 total = 0
    cdef Py_ssize_t i
    for i in range(n):
        total += weights[i]
    if cap > total:
        cap = total
    out = np.zeros(n, dtype=np.uint8)
    cdef unsigned char[::1] out_v = out
    if n == 0:
        return out
    cdef double* best = <double*> malloc((cap + 1) * sizeof(double))
    cdef unsigned char* keep = <unsigned char*> malloc(n * (cap + 1))
    if best == NULL or keep == NULL:
        free(best)
        free(keep)
        raise MemoryError()
    with nogil:
        _knapsack(&values[0], &weights[0], n, cap, best, keep, &out_v[0])
    free(best)
    free(keep)
    return out


def run_max_weight(const i64[:, ::1] excess, i64 w_c, const double[::1] targets,
                   bint record_decisions=True, bint record_deficits=False):
    """Execute the Max-Weight scheduler over an excess-demand trace.

    Returns ``(served, decisions, deficit_final, deficit_max, deficits)``.
    """
    cdef Py_ssize_t T = excess.shape[0]
    cdef Py_ssize_t N = excess.shape[1]
    cdef Py_ssize_t t, i, k, n
    cdef i64 e, cap, pos_total, max_pos = 0
    for t in range(T):
        pos_total = 0
        for i in range(N):
            if excess[t, i] > 0:
                pos_total += excess[t, i]
        if pos_total > max_pos:
            max_pos = pos_total

    served = np.zeros(N, dtype=np.int64)
    d_final = np.zeros(N, dtype=np.float64)
    d_max = np.zeros(N, dtype=np.float64)
    cdef i64[::1] served_v = served
    cdef double[::1] d = d_final
    cdef double[::1] dmax = d_max
    decisions = np.zeros((T if record_decisions else 0, N), dtype=np.uint8)
    deficits = np.zeros((T if record_deficits else 0, N), dtype=np.float64)
    cdef unsigned char[:, ::1] dec_v = decisions
    cdef double[:, ::1] def_v = deficits

    cdef double* vals = <double*> malloc((N + 1) * sizeof(double))
    cdef i64* wts = <i64*> malloc((N + 1) * sizeof(i64))
    cdef Py_ssize_t* idx = <Py_ssize_t*> malloc((N + 1) * sizeof(Py_ssize_t))
    cdef unsigned char* sel = <unsigned char*> malloc(N + 1)
    cdef unsigned char* hit = <unsigned char*> malloc(N + 1)
    cdef double* best = <double*> malloc((max_pos + 1) * sizeof(double))
    cdef unsigned char* keep = <unsigned char*> malloc((N + 1) * (max_pos + 1))
    if (vals == NULL or wts == NULL or idx == NULL or sel == NULL or hit == NULL
            or best == NULL or keep == NULL):
        free(vals); free(wts); free(idx); free(sel); free(hit); free(best); free(keep)
        raise MemoryError()

    cdef double x
    with nogil:
        for t in range(T):
            cap = w_c
            n = 0
            for i in range(N):
                e = excess[t, i]
                hit[i] = 0
                if e > 0:
                    vals[n] = d[i]
                    wts[n] = e
                    idx[n] = i
                    n += 1
                else:
                    cap -= e
            if n > 0:
                pos_total = 0
                for k in range(n):
                    pos_total += wts[k]
                if cap > pos_total:
                    cap = pos_total
                if cap < 0:
                    cap = 0
                _knapsack(vals, wts, n, cap, best, keep, sel)
                for k in range(n):
                    if sel[k]:
                        hit[idx[k]] = 1
            for i in range(N):
                if hit[i]:
                    served_v[i] += 1
                    x = d[i] - 1.0
                else:
                    x = d[i]
                if x < 0.0:
                    x = 0.0
                x = x + targets[i]
                if x < 0.0:
                    x = 0.0
                d[i] = x
                if x > dmax[i]:
                    dmax[i] = x
                if record_decisions:
                    dec_v[t, i] = 1 if (hit[i] or excess[t, i] <= 0) else 0
                if record_deficits:
                    def_v[t, i] = x

    free(vals); free(wts); free(idx); free(sel); free(hit); free(best); free(keep)
    return (served, decisions if record_decisions else None, d_final, d_max,
            deficits if record_deficits else None)


def markov_walk(const double[:, ::1] cumulative, i64 start, const double[::1] uniforms):
    """Walk a chain: next state is the first j with u < cumulative[state, j]."""
    cdef Py_ssize_t T = uniforms.shape[0] + 1
    cdef Py_ssize_t S = cumulative.shape[1]
    cdef Py_ssize_t t, j
    cdef i64 s = start
    cdef double u
    states = np.empty(T, dtype=np.int64)
    cdef i64[::1] out = states
    out[0] = s
    with nogil:
        for t in range(1, T):
            u = uniforms[t - 1]
            j = 0
            while j < S - 1 and not (u < cumulative[s, j]):
                j += 1
            s = j
            out[t] = s
    return states
