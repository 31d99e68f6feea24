# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Pooled-adjacent-violators kernel (compiled backend)."""

import numpy as np


def pava(const double[::1] values, const double[::1] weights):
    """Weighted least-squares nondecreasing fit.

    ``values`` must already be ordered by the predictor; ties pre-pooled by
    the caller. Returns the fitted vector, constant on each merged block.
    """
    cdef Py_ssize_t n = values.shape[0]
    out_arr = np.empty(n, dtype=np.float64)
    if n == 0:
        return out_arr
    lv_arr = np.empty(n, dtype=np.float64)
    lw_arr = np.empty(n, dtype=np.float64)
    end_arr = np.empty(n, dtype=np.intp)
    cdef double[::1] out = out_arr
    cdef double[::1] lv = lv_arr
    cdef double[::1] lw = lw_arr
    cdef Py_ssize_t[::1] end = end_arr
    cdef Py_ssize_t i, k, start
    cdef Py_ssize_t j = -1
    cdef double tot
    for i in range(n):
        j += 1
        lv[j] = values[i]
        lw[j] = weights[i]
        end[j] = i + 1
        while j > 0 and lv[j - 1] > lv[j]:
            tot = lw[j - 1] + lw[j]
            lv[j - 1] = (lw[j - 1] * lv[j - 1] + lw[j] * lv[j]) / tot
            lw[j - 1] = tot
            end[j - 1] = end[j]
            j -= 1
    start = 0
    for k in range(j + 1):
        for i in range(start, end[k]):
            out[i] = lv[k]
        start = end[k]
    return out_arr
