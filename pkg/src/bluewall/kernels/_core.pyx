# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled value-network kernels.

Mirrors ``fallback.py``: 3-layer MLP (ReLU, ReLU, linear) forward and
backward in float64.  Matrix products run on the BLAS scipy links
against; bias addition, ReLU clamping, and derivative masking are fused
into single C loops, so a full pass costs one call per layer instead of
a chain of numpy dispatches.
"""

import numpy as np

cimport numpy as cnp
from scipy.linalg.cython_blas cimport dgemm, dgemv

cnp.import_array()

BACKEND = "compiled"


cdef void _gemm_nn(double[:, ::1] a, double[:, ::1] b,
                   double[:, ::1] out) noexcept nogil:
    # out = a @ b; row-major arrays fed to column-major BLAS as out^T = b^T a^T
    cdef int m = <int> b.shape[1]
    cdef int n = <int> a.shape[0]
    cdef int k = <int> a.shape[1]
    cdef int inc = 1
    cdef double one = 1.0, zero = 0.0
    if n == 1:
        # single observation: the matrix-vector routine wins here
        dgemv("N", &m, &k, &one, &b[0, 0], &m, &a[0, 0], &inc,
              &zero, &out[0, 0], &inc)
        return
    dgemm("N", "N", &m, &n, &k, &one, &b[0, 0], &m, &a[0, 0], &k,
          &zero, &out[0, 0], &m)


cdef void _gemm_tn(double[:, ::1] a, double[:, ::1] b,
                   double[:, ::1] out) noexcept nogil:
    # out = a.T @ b for a (n, p) and b (n, m)
    cdef int m = <int> b.shape[1]
    cdef int p = <int> a.shape[1]
    cdef int n = <int> a.shape[0]
    cdef double one = 1.0, zero = 0.0
    dgemm("N", "T", &m, &p, &n, &one, &b[0, 0], &m, &a[0, 0], &p,
          &zero, &out[0, 0], &m)


cdef void _gemm_nt(double[:, ::1] a, double[:, ::1] b,
                   double[:, ::1] out) noexcept nogil:
    # out = a @ b.T for a (n, m) and b (p, m)
    cdef int p = <int> b.shape[0]
    cdef int n = <int> a.shape[0]
    cdef int m = <int> a.shape[1]
    cdef double one = 1.0, zero = 0.0
    dgemm("T", "N", &p, &n, &m, &one, &b[0, 0], &m, &a[0, 0], &m,
          &zero, &out[0, 0], &p)


cdef void _bias_relu(double[:, ::1] out, double[::1] b,
                     bint relu) noexcept nogil:
    cdef Py_ssize_t n = out.shape[0], m = out.shape[1]
    cdef Py_ssize_t i, j
    cdef double v
    for i in range(n):
        for j in range(m):
            v = out[i, j] + b[j]
            if relu and v < 0.0:
                v = 0.0
            out[i, j] = v


def mlp_forward(cnp.ndarray[double, ndim=2] x,
                cnp.ndarray[double, ndim=2] w1, cnp.ndarray[double, ndim=1] b1,
                cnp.ndarray[double, ndim=2] w2, cnp.ndarray[double, ndim=1] b2,
                cnp.ndarray[double, ndim=2] w3, cnp.ndarray[double, ndim=1] b3):
    cdef Py_ssize_t n = x.shape[0]
    cdef cnp.ndarray[double, ndim=2] h1 = np.empty((n, w1.shape[1]))
    cdef cnp.ndarray[double, ndim=2] h2 = np.empty((n, w2.shape[1]))
    cdef cnp.ndarray[double, ndim=2] out = np.empty((n, w3.shape[1]))
    _gemm_nn(x, w1, h1)
    _bias_relu(h1, b1, True)
    _gemm_nn(h1, w2, h2)
    _bias_relu(h2, b2, True)
    _gemm_nn(h2, w3, out)
    _bias_relu(out, b3, False)
    return h1, h2, out


cdef void _mask_by_activation(double[:, ::1] dz,
                              double[:, ::1] act) noexcept nogil:
    # ReLU derivative: zero wherever the activation did not fire
    cdef Py_ssize_t n = dz.shape[0], m = dz.shape[1]
    cdef Py_ssize_t i, j
    for i in range(n):
        for j in range(m):
            if act[i, j] <= 0.0:
                dz[i, j] = 0.0


cdef void _colsum(double[:, ::1] a, double[::1] out) noexcept nogil:
    cdef Py_ssize_t n = a.shape[0], m = a.shape[1]
    cdef Py_ssize_t i, j
    for j in range(m):
        out[j] = 0.0
    for i in range(n):
        for j in range(m):
            out[j] += a[i, j]


def mlp_backward(cnp.ndarray[double, ndim=2] x,
                 cnp.ndarray[double, ndim=2] h1, cnp.ndarray[double, ndim=2] h2,
                 cnp.ndarray[double, ndim=2] w2, cnp.ndarray[double, ndim=2] w3,
                 cnp.ndarray[double, ndim=2] dout):
    cdef Py_ssize_t n = x.shape[0]
    cdef cnp.ndarray[double, ndim=2] dw3 = np.empty((h2.shape[1], dout.shape[1]))
    cdef cnp.ndarray[double, ndim=1] db3 = np.empty(dout.shape[1])
    cdef cnp.ndarray[double, ndim=2] dz2 = np.empty((n, h2.shape[1]))
    cdef cnp.ndarray[double, ndim=2] dw2 = np.empty((h1.shape[1], h2.shape[1]))
    cdef cnp.ndarray[double, ndim=1] db2 = np.empty(h2.shape[1])
    cdef cnp.ndarray[double, ndim=2] dz1 = np.empty((n, h1.shape[1]))
    cdef cnp.ndarray[double, ndim=2] dw1 = np.empty((x.shape[1], h1.shape[1]))
    cdef cnp.ndarray[double, ndim=1] db1 = np.empty(h1.shape[1])

    _gemm_tn(h2, dout, dw3)
    _colsum(dout, db3)
    _gemm_nt(dout, w3, dz2)
    _mask_by_activation(dz2, h2)
    _gemm_tn(h1, dz2, dw2)
    _colsum(dz2, db2)
    _gemm_nt(dz2, w2, dz1)
    _mask_by_activation(dz1, h1)
    _gemm_tn(x, dz1, dw1)
    _colsum(dz1, db1)
    return dw1, db1, dw2, db2, dw3, db3
