# cython: language_level=3
"""Compiled kernels; a line-for-line twin of ``_pykernels``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs

cnp.import_array()


def ewma_filter(x, double alpha, double initial=0.0):
    cdef const double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef Py_ssize_t n = xv.shape[0]
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] ov = out
    cdef double beta = 1.0 - alpha
    cdef double e = initial
    cdef Py_ssize_t i
    with nogil:
        for i in range(n):
            e = alpha * e + beta * xv[i]
            ov[i] = e
    return out


def sma_filter(x, Py_ssize_t n):
    cdef const double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef Py_ssize_t size = xv.shape[0]
    out = np.empty(size, dtype=np.float64)
    buf_arr = np.zeros(n, dtype=np.float64)
    cdef double[::1] ov = out
    cdef double[::1] buf = buf_arr
    cdef double s = 0.0
    cdef double v
    cdef Py_ssize_t pos = 0
    cdef Py_ssize_t count = 0
    cdef Py_ssize_t i
    with nogil:
        for i in range(size):
            v = xv[i]
            if count >= n:
                s -= buf[pos]
            else:
                count += 1
            s += v
            buf[pos] = v
            pos += 1
            if pos == n:
                pos = 0
            ov[i] = s / count
    return out


def srmac_scan(x, double alpha_fast, double alpha_slow, double alpha_cross,
               double threshold, double[::1] state):
    cdef const double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef Py_ssize_t size = xv.shape[0]
    # at most one ROI closes per two samples
    cdef Py_ssize_t cap = size // 2 + 1
    peaks_arr = np.empty(cap, dtype=np.int64)
    starts_arr = np.empty(cap, dtype=np.int64)
    ends_arr = np.empty(cap, dtype=np.int64)
    cdef cnp.int64_t[::1] peaks = peaks_arr
    cdef cnp.int64_t[::1] starts = starts_arr
    cdef cnp.int64_t[::1] ends = ends_arr

    cdef double bf = 1.0 - alpha_fast
    cdef double bs = 1.0 - alpha_slow
    cdef double bc = 1.0 - alpha_cross
    cdef double ef = state[0]
    cdef double es = state[1]
    cdef double ec = state[2]
    cdef bint in_roi = state[3] != 0.0
    cdef double best_val = state[4]
    cdef cnp.int64_t best_idx = <cnp.int64_t>state[5]
    cdef cnp.int64_t roi_open = <cnp.int64_t>state[6]
    cdef cnp.int64_t count = <cnp.int64_t>state[7]
    cdef Py_ssize_t k = 0
    cdef Py_ssize_t i
    cdef double v

    with nogil:
        for i in range(size):
            v = xv[i]
            ef = alpha_fast * ef + bf * v
            es = alpha_slow * es + bs * v
            ec = alpha_cross * ec + bc * (ef - es)
            if ec > threshold:
                if not in_roi:
                    in_roi = True
                    roi_open = count
                    best_val = v
                    best_idx = count
                elif v > best_val:
                    best_val = v
                    best_idx = count
            elif in_roi:
                peaks[k] = best_idx
                starts[k] = roi_open
                ends[k] = count
                k += 1
                in_roi = False
            count += 1

    state[0] = ef
    state[1] = es
    state[2] = ec
    state[3] = 1.0 if in_roi else 0.0
    state[4] = best_val
    state[5] = <double>best_idx
    state[6] = <double>roi_open
    state[7] = <double>count
    return peaks_arr[:k].copy(), starts_arr[:k].copy(), ends_arr[:k].copy()


def segment_argmax(above, signal, Py_ssize_t min_width):
    cdef const cnp.uint8_t[::1] av = np.ascontiguousarray(above, dtype=np.uint8)
    cdef const double[::1] sv = np.ascontiguousarray(signal, dtype=np.float64)
    cdef Py_ssize_t n = av.shape[0]
    cdef Py_ssize_t cap = n // 2 + 1
    peaks_arr = np.empty(cap, dtype=np.int64)
    starts_arr = np.empty(cap, dtype=np.int64)
    ends_arr = np.empty(cap, dtype=np.int64)
    cdef cnp.int64_t[::1] peaks = peaks_arr
    cdef cnp.int64_t[::1] starts = starts_arr
    cdef cnp.int64_t[::1] ends = ends_arr
    cdef Py_ssize_t i = 0
    cdef Py_ssize_t k = 0
    cdef Py_ssize_t start, best
    cdef double best_val

    with nogil:
        while i < n:
            if not av[i]:
                i += 1
                continue
            start = i
            best = start
            best_val = sv[start]
            i += 1
            while i < n and av[i]:
                if sv[i] > best_val:
                    best_val = sv[i]
                    best = i
                i += 1
            if i - start >= min_width:
                peaks[k] = best
                starts[k] = start
                ends[k] = i
                k += 1
    return peaks_arr[:k].copy(), starts_arr[:k].copy(), ends_arr[:k].copy()


def match_events(detected, annotated, double tol):
    cdef const double[::1] dv = np.ascontiguousarray(detected, dtype=np.float64)
    cdef const double[::1] av = np.ascontiguousarray(annotated, dtype=np.float64)
    cdef Py_ssize_t nd = dv.shape[0]
    cdef Py_ssize_t m = av.shape[0]
    cdef Py_ssize_t cap = nd if nd < m else m
    det_arr = np.empty(cap, dtype=np.int64)
    ann_arr = np.empty(cap, dtype=np.int64)
    cdef cnp.int64_t[::1] det_idx = det_arr
    cdef cnp.int64_t[::1] ann_idx = ann_arr
    cdef Py_ssize_t i
    cdef Py_ssize_t j = 0
    cdef Py_ssize_t k = 0
    cdef double d

    with nogil:
        for i in range(nd):
            d = dv[i]
            while j < m and av[j] < d and d - av[j] >= tol:
                j += 1
            if j < m and fabs(av[j] - d) < tol:
                det_idx[k] = i
                ann_idx[k] = j
                k += 1
                j += 1
    return det_arr[:k].copy(), ann_arr[:k].copy()
