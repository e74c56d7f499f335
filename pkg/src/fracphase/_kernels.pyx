# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled hot kernels: weighted accumulation of the Caputo history sum."""

import numpy as np
cimport numpy as cnp


def weighted_history_sum(double[::1] coeffs, double[:, :, ::1] increments, double[:, ::1] out):
    """out = sum_k coeffs[k] * increments[k]; out overwritten in place."""
    cdef Py_ssize_t n = coeffs.shape[0]
    cdef Py_ssize_t nx = out.shape[0]
    cdef Py_ssize_t ny = out.shape[1]
    cdef Py_ssize_t k, i, j
    cdef double c
    for i in range(nx):
        for j in range(ny):
            out[i, j] = 0.0
    for k in range(n):
        c = coeffs[k]
        for i in range(nx):
            for j in range(ny):
                out[i, j] += c * increments[k, i, j]
    return np.asarray(out)
