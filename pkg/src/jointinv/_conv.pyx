# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled correlation kernels over flattened, zero-padded planes.

Each (sample, channel) plane is stored as one contiguous row and a kernel
tap becomes a fixed offset into that row. The register-blocked inner loops
live in ``corr_core.h``; :mod:`jointinv.kernels` builds the padded rows and
crops the results.
"""

import numpy as np
cimport numpy as cnp

cnp.import_array()

cdef extern from "corr_core.h" nogil:
    void jl_correlate(const double *src, const double *k, const Py_ssize_t *off,
                      double *out, Py_ssize_t N, Py_ssize_t Ci, Py_ssize_t Co,
                      Py_ssize_t T, Py_ssize_t L, Py_ssize_t length)
    void jl_weight_grad(const double *g, const double *src, const Py_ssize_t *off,
                        double *part, Py_ssize_t N, Py_ssize_t Ci, Py_ssize_t Co,
                        Py_ssize_t T, Py_ssize_t L, Py_ssize_t length)


cdef Py_ssize_t _check_offsets(const Py_ssize_t[::1] offsets, Py_ssize_t length,
                               Py_ssize_t row) except -1:
    cdef Py_ssize_t t, maxoff = 0
    for t in range(offsets.shape[0]):
        if offsets[t] < 0:
            raise ValueError("offsets must be non-negative")
        if offsets[t] > maxoff:
            maxoff = offsets[t]
    if length + maxoff > row:
        raise ValueError(f"source rows of {row} too short for length {length} + offset {maxoff}")
    return maxoff


def correlate(const double[:, :, ::1] src, const double[:, :, ::1] k,
              const Py_ssize_t[::1] offsets, Py_ssize_t length):
    """out[n, co, p] = sum_{ci, t} k[co, ci, t] * src[n, ci, p + offsets[t]]

    for p in [0, length); ``length`` must be a multiple of 8.
    """
    cdef Py_ssize_t N = src.shape[0], Ci = src.shape[1], L = src.shape[2]
    cdef Py_ssize_t Co = k.shape[0], T = k.shape[2]
    if k.shape[1] != Ci or offsets.shape[0] != T:
        raise ValueError("kernel/offset shapes do not match source")
    if length % 8 or length <= 0:
        raise ValueError("length must be a positive multiple of 8")
    _check_offsets(offsets, length, L)
    out_arr = np.empty((N, Co, length), dtype=np.float64)
    cdef double[:, :, ::1] out = out_arr
    with nogil:
        jl_correlate(&src[0, 0, 0], &k[0, 0, 0], &offsets[0], &out[0, 0, 0],
                     N, Ci, Co, T, L, length)
    return out_arr


def weight_grad(const double[:, :, ::1] g, const double[:, :, ::1] src,
                const Py_ssize_t[::1] offsets):
    """gk[co, ci, t] = sum_{n, p} g[n, co, p] * src[n, ci, p + offsets[t]]

    ``g.shape[2]`` must be a multiple of 4.
    """
    cdef Py_ssize_t N = g.shape[0], Co = g.shape[1], length = g.shape[2]
    cdef Py_ssize_t Ci = src.shape[1], L = src.shape[2], T = offsets.shape[0]
    if src.shape[0] != N:
        raise ValueError("batch sizes differ")
    if length % 4 or length <= 0:
        raise ValueError("length must be a positive multiple of 4")
    _check_offsets(offsets, length, L)
    part_arr = np.zeros((Co, Ci, T, 4), dtype=np.float64)
    cdef double[:, :, :, ::1] part = part_arr
    with nogil:
        jl_weight_grad(&g[0, 0, 0], &src[0, 0, 0], &offsets[0], &part[0, 0, 0, 0],
                       N, Ci, Co, T, L, length)
    # fixed pairwise lane reduction
    return (part_arr[..., 0] + part_arr[..., 2]) + (part_arr[..., 1] + part_arr[..., 3])
