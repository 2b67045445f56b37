# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels for the structured 5-point operator.

All arrays are C-contiguous float64 of shape (nx, ny). ``aE[i, j]`` couples
node (i, j) to (i+1, j) and ``aN[i, j]`` couples (i, j) to (i, j+1); both are
zero on the last row/column. The operator is

    (A x)[i,j] = aP x[i,j] - aE[i,j] x[i+1,j] - aE[i-1,j] x[i-1,j]
                           - aN[i,j] x[i,j+1] - aN[i,j-1] x[i,j-1]
"""

import numpy as np


def stencil_apply(double[:, ::1] aP, double[:, ::1] aE, double[:, ::1] aN,
                  double[:, ::1] x, double[:, ::1] out):
    cdef Py_ssize_t nx = aP.shape[0], ny = aP.shape[1], i, j
    cdef double s
    for i in range(nx):
        for j in range(ny):
            s = aP[i, j] * x[i, j]
            if i + 1 < nx:
                s -= aE[i, j] * x[i + 1, j]
            if i > 0:
                s -= aE[i - 1, j] * x[i - 1, j]
            if j + 1 < ny:
                s -= aN[i, j] * x[i, j + 1]
            if j > 0:
                s -= aN[i, j - 1] * x[i, j - 1]
            out[i, j] = s


def dic_factor(double[:, ::1] aP, double[:, ::1] aE, double[:, ::1] aN):
    """Diagonal of the incomplete Cholesky (DIC) factor in natural order."""
    cdef Py_ssize_t nx = aP.shape[0], ny = aP.shape[1], i, j
    d_arr = np.empty((nx, ny))
    cdef double[:, ::1] d = d_arr
    cdef double v
    for i in range(nx):
        for j in range(ny):
            v = aP[i, j]
            if j > 0:
                v -= aN[i, j - 1] * aN[i, j - 1] / d[i, j - 1]
            if i > 0:
                v -= aE[i - 1, j] * aE[i - 1, j] / d[i - 1, j]
            d[i, j] = v
    return d_arr


def dic_solve(double[:, ::1] d, double[:, ::1] aE, double[:, ::1] aN,
              double[:, ::1] r, double[:, ::1] z):
    """z = M^-1 r with M = (D - L) D^-1 (D - L^T)."""
    cdef Py_ssize_t nx = d.shape[0], ny = d.shape[1], i, j
    cdef double v
    for i in range(nx):
        for j in range(ny):
            v = r[i, j]
            if j > 0:
                v += aN[i, j - 1] * z[i, j - 1]
            if i > 0:
                v += aE[i - 1, j] * z[i - 1, j]
            z[i, j] = v / d[i, j]
    for i in range(nx - 1, -1, -1):
        for j in range(ny - 1, -1, -1):
            v = 0.0
            if j + 1 < ny:
                v += aN[i, j] * z[i, j + 1]
            if i + 1 < nx:
                v += aE[i, j] * z[i + 1, j]
            z[i, j] += v / d[i, j]


def sor_redblack(double[:, ::1] aP, double[:, ::1] aE, double[:, ::1] aN,
                 double[:, ::1] b, double[:, ::1] phi, double omega, int sweeps):
    """Red-black SOR sweeps in place (red: i + j even)."""
    cdef Py_ssize_t nx = aP.shape[0], ny = aP.shape[1], i, j
    cdef int k, color
    cdef double s
    for k in range(sweeps):
        for color in range(2):
            for i in range(nx):
                for j in range((i + color) % 2, ny, 2):
                    s = b[i, j]
                    if i + 1 < nx:
                        s += aE[i, j] * phi[i + 1, j]
                    if i > 0:
                        s += aE[i - 1, j] * phi[i - 1, j]
                    if j + 1 < ny:
                        s += aN[i, j] * phi[i, j + 1]
                    if j > 0:
                        s += aN[i, j - 1] * phi[i, j - 1]
                    phi[i, j] += omega * (s / aP[i, j] - phi[i, j])
