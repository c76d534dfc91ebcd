# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled bitset kernels; same contract as ``dpm.spm._pykernels``."""

import numpy as np

from libc.stdint cimport int64_t, uint64_t

WORD_BITS = 64


cdef void _dilate_row(const uint64_t[::1] src, uint64_t[::1] dst, long max_gap) noexcept nogil:
    cdef Py_ssize_t width = src.shape[0]
    cdef Py_ssize_t w, q, j
    cdef long k, r
    cdef uint64_t low
    cdef bint seen = False

    if max_gap <= 0 or max_gap >= width * 64:
        for w in range(width):
            if seen:
                dst[w] = <uint64_t>0xFFFFFFFFFFFFFFFF
            elif src[w] != 0:
                low = src[w] & (~src[w] + 1)
                dst[w] = ~(low | (low - 1))
                seen = True
            else:
                dst[w] = 0
        return

    for w in range(width):
        dst[w] = 0
    for k in range(1, max_gap + 1):
        q = k // 64
        r = k % 64
        for j in range(width - 1, q - 1, -1):
            if r == 0:
                dst[j] |= src[j - q]
            else:
                dst[j] |= src[j - q] << r
                if j - q - 1 >= 0:
                    dst[j] |= src[j - q - 1] >> (64 - r)


def dilate(prefix_ends, long max_gap):
    cdef const uint64_t[:, ::1] src = np.ascontiguousarray(prefix_ends, dtype=np.uint64)
    out = np.zeros_like(prefix_ends, dtype=np.uint64)
    cdef uint64_t[:, ::1] dst = out
    cdef Py_ssize_t s
    with nogil:
        for s in range(src.shape[0]):
            _dilate_row(src[s], dst[s], max_gap)
    return out


def extend(prefix_ends, index, candidates, long max_gap):
    cdef const uint64_t[:, ::1] pre = np.ascontiguousarray(prefix_ends, dtype=np.uint64)
    cdef const uint64_t[:, :, ::1] idx = np.ascontiguousarray(index, dtype=np.uint64)
    cdef const int64_t[::1] cand = np.ascontiguousarray(candidates, dtype=np.int64)
    cdef Py_ssize_t nseq = pre.shape[0]
    cdef Py_ssize_t width = pre.shape[1]
    cdef Py_ssize_t ncand = cand.shape[0]

    reach_arr = np.zeros((nseq, width), dtype=np.uint64)
    ends_arr = np.zeros((ncand, nseq, width), dtype=np.uint64)
    supports_arr = np.zeros(ncand, dtype=np.int64)
    cdef uint64_t[:, ::1] reach = reach_arr
    cdef uint64_t[:, :, ::1] ends = ends_arr
    cdef int64_t[::1] supports = supports_arr

    cdef Py_ssize_t c, s, w
    cdef int64_t sym
    cdef uint64_t word
    cdef bint hit

    with nogil:
        for s in range(nseq):
            _dilate_row(pre[s], reach[s], max_gap)
        for c in range(ncand):
            sym = cand[c]
            for s in range(nseq):
                hit = False
                for w in range(width):
                    word = idx[sym, s, w] & reach[s, w]
                    ends[c, s, w] = word
                    if word != 0:
                        hit = True
                if hit:
                    supports[c] += 1
    return ends_arr, supports_arr
