# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled 1D convolution kernels; same contract as _conv_np.

Reductions run in a fixed (channel, tap) order per output element, so
results are deterministic run to run.
"""

import numpy as np


def conv1d_forward(double[:, :, ::1] x, double[:, :, ::1] w, int stride, int padding):
    cdef Py_ssize_t batch = x.shape[0], cin = x.shape[1], length = x.shape[2]
    cdef Py_ssize_t cout = w.shape[0], kernel = w.shape[2]
    cdef Py_ssize_t lout = (length + 2 * padding - kernel) // stride + 1
    cdef Py_ssize_t lp = length + 2 * padding

    xp_arr = np.zeros((batch, cin, lp), dtype=np.float64)
    xp_arr[:, :, padding:padding + length] = x
    out_arr = np.zeros((batch, cout, lout), dtype=np.float64)

    cdef double[:, :, ::1] xp = xp_arr
    cdef double[:, :, ::1] out = out_arr
    cdef Py_ssize_t b, co, ci, k, lo
    cdef double wv

    for b in range(batch):
        for co in range(cout):
            for ci in range(cin):
                for k in range(kernel):
                    wv = w[co, ci, k]
                    for lo in range(lout):
                        out[b, co, lo] += wv * xp[b, ci, lo * stride + k]
    return out_arr


def conv1d_backward(double[:, :, ::1] x, double[:, :, ::1] w,
                    double[:, :, ::1] grad_out, int stride, int padding):
    cdef Py_ssize_t batch = x.shape[0], cin = x.shape[1], length = x.shape[2]
    cdef Py_ssize_t cout = w.shape[0], kernel = w.shape[2]
    cdef Py_ssize_t lout = grad_out.shape[2]
    cdef Py_ssize_t lp = length + 2 * padding

    xp_arr = np.zeros((batch, cin, lp), dtype=np.float64)
    xp_arr[:, :, padding:padding + length] = x
    gxp_arr = np.zeros((batch, cin, lp), dtype=np.float64)
    gw_arr = np.zeros((cout, cin, kernel), dtype=np.float64)

    cdef double[:, :, ::1] xp = xp_arr
    cdef double[:, :, ::1] gxp = gxp_arr
    cdef double[:, :, ::1] gw = gw_arr
    cdef Py_ssize_t b, co, ci, k, lo
    cdef double wv, acc, go

    for b in range(batch):
        for co in range(cout):
            for ci in range(cin):
                for k in range(kernel):
                    wv = w[co, ci, k]
                    acc = 0.0
                    for lo in range(lout):
                        go = grad_out[b, co, lo]
                        acc += go * xp[b, ci, lo * stride + k]
                        gxp[b, ci, lo * stride + k] += go * wv
                    gw[co, ci, k] += acc

    grad_x = gxp_arr[:, :, padding:padding + length].copy() if padding else gxp_arr
    return grad_x, gw_arr
