# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled selective scan kernels (same contract as _scan_py)."""

import numpy as np

cimport cython
from libc.math cimport exp

ctypedef fused floating:
    float
    double


def scan_forward(floating[:, ::1] x, floating[:, ::1] dt,
                 floating[:, ::1] B, floating[:, ::1] C,
                 floating[:, ::1] A, floating[::1] skip):
    cdef Py_ssize_t L = x.shape[0]
    cdef Py_ssize_t D = x.shape[1]
    cdef Py_ssize_t N = A.shape[1]
    if floating is float:
        dtype = np.float32
    else:
        dtype = np.float64
    hs_arr = np.empty((L, D, N), dtype=dtype)
    y_arr = np.empty((L, D), dtype=dtype)
    cdef floating[:, :, ::1] hs = hs_arr
    cdef floating[:, ::1] y = y_arr
    cdef floating h, a, acc, dtx
    cdef Py_ssize_t t, d, n
    with nogil:
        for d in range(D):
            for n in range(N):
                h = 0.0
                for t in range(L):
                    a = exp(dt[t, d] * A[d, n])
                    h = a * h + dt[t, d] * x[t, d] * B[t, n]
                    hs[t, d, n] = h
        for t in range(L):
            for d in range(D):
                acc = skip[d] * x[t, d]
                for n in range(N):
                    acc += hs[t, d, n] * C[t, n]
                y[t, d] = acc
    return y_arr, hs_arr


def scan_backward(floating[:, ::1] x, floating[:, ::1] dt,
                  floating[:, ::1] B, floating[:, ::1] C,
                  floating[:, ::1] A, floating[::1] skip,
                  floating[:, :, ::1] hs, floating[:, ::1] gy):
    cdef Py_ssize_t L = x.shape[0]
    cdef Py_ssize_t D = x.shape[1]
    cdef Py_ssize_t N = A.shape[1]
    if floating is float:
        dtype = np.float32
    else:
        dtype = np.float64
    gx_arr = np.zeros((L, D), dtype=dtype)
    gdt_arr = np.zeros((L, D), dtype=dtype)
    gB_arr = np.zeros((L, N), dtype=dtype)
    gC_arr = np.zeros((L, N), dtype=dtype)
    gA_arr = np.zeros((D, N), dtype=dtype)
    gskip_arr = np.zeros(D, dtype=dtype)
    cdef floating[:, ::1] gx = gx_arr
    cdef floating[:, ::1] gdt = gdt_arr
    cdef floating[:, ::1] gB = gB_arr
    cdef floating[:, ::1] gC = gC_arr
    cdef floating[:, ::1] gA = gA_arr
    cdef floating[::1] gskip = gskip_arr
    cdef floating gh, a, u, hprev, g_da, dtx
    cdef Py_ssize_t t, d, n
    with nogil:
        # gC, gskip and the residual part of gx are plain per-step sums.
        for t in range(L):
            for d in range(D):
                u = gy[t, d]
                gskip[d] += u * x[t, d]
                gx[t, d] += u * skip[d]
                for n in range(N):
                    gC[t, n] += hs[t, d, n] * u
        # Reverse recurrence, one (d, n) state lane at a time.
        for d in range(D):
            for n in range(N):
                gh = 0.0
                for t in range(L - 1, -1, -1):
                    gh += gy[t, d] * C[t, n]
                    a = exp(dt[t, d] * A[d, n])
                    if t > 0:
                        hprev = hs[t - 1, d, n]
                    else:
                        hprev = 0.0
                    g_da = gh * hprev
                    gA[d, n] += g_da * a * dt[t, d]
                    gdt[t, d] += g_da * a * A[d, n]
                    gdt[t, d] += gh * B[t, n] * x[t, d]
                    gx[t, d] += gh * dt[t, d] * B[t, n]
                    gB[t, n] += gh * dt[t, d] * x[t, d]
                    gh = gh * a
    return gx_arr, gdt_arr, gB_arr, gC_arr, gA_arr, gskip_arr
