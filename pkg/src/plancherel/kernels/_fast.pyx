# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled weighted power-sum reductions.

These are the inner loops of spherical-function evaluation and of both Fourier
transforms: sum over quadrature nodes of w_k * exp(sum_r s_r * L_r[i, k]) for a
batch of group points i and spectral parameters j.
"""

import numpy as np

from libc.math cimport exp, cos, sin


def power_sum_1(double[:, ::1] logq, double[::1] wk,
                double complex[::1] s, double complex[:, ::1] out):
    """out[i, j] = sum_k wk[k] * exp(s[j] * logq[i, k])."""
    cdef Py_ssize_t ni = logq.shape[0], nk = logq.shape[1], ns = s.shape[0]
    cdef Py_ssize_t i, j, k
    cdef double a, b, L, m, re, im
    for i in range(ni):
        for j in range(ns):
            a = s[j].real
            b = s[j].imag
            re = 0.0
            im = 0.0
            if b == 0.0:
                for k in range(nk):
                    re += wk[k] * exp(a * logq[i, k])
            else:
                for k in range(nk):
                    L = logq[i, k]
                    m = wk[k] * exp(a * L)
                    re += m * cos(b * L)
                    im += m * sin(b * L)
            out[i, j] = re + 1j * im


def power_sum_2(double[:, ::1] l1, double[:, ::1] l2, double[::1] wk,
                double complex[::1] s1, double complex[::1] s2,
                double complex[:, ::1] out):
    """out[i, j] = sum_k wk[k] * exp(s1[j]*l1[i, k] + s2[j]*l2[i, k])."""
    cdef Py_ssize_t ni = l1.shape[0], nk = l1.shape[1], ns = s1.shape[0]
    cdef Py_ssize_t i, j, k
    cdef double a1, b1, a2, b2, u, v, m, re, im
    for i in range(ni):
        for j in range(ns):
            a1 = s1[j].real
            b1 = s1[j].imag
            a2 = s2[j].real
            b2 = s2[j].imag
            re = 0.0
            im = 0.0
            for k in range(nk):
                u = a1 * l1[i, k] + a2 * l2[i, k]
                v = b1 * l1[i, k] + b2 * l2[i, k]
                m = wk[k] * exp(u)
                re += m * cos(v)
                im += m * sin(v)
            out[i, j] = re + 1j * im
