# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled dense-layer kernels: BLAS dgemm plus fused bias/ReLU loops.

Same contract as the pure-NumPy fallback in ``_kernels_py``.  The arrays are
C-ordered float64; dgemm is driven through the standard Fortran-order
reinterpretation (a C-ordered (m, n) array is a Fortran-ordered (n, m) one).
"""

import numpy as np

cimport numpy as cnp
from scipy.linalg.cython_blas cimport dgemm

cnp.import_array()

COMPILED = True


cdef void _gemm(char ta, char tb, int m, int n, int k,
                double* a, int lda, double* b, int ldb,
                double* c, int ldc) noexcept nogil:
    cdef double one = 1.0, zero = 0.0
    dgemm(&ta, &tb, &m, &n, &k, &one, a, &lda, b, &ldb, &zero, c, &ldc)


def dense_forward(cnp.ndarray[double, ndim=2, mode="c"] x,
                  cnp.ndarray[double, ndim=2, mode="c"] w,
                  cnp.ndarray[double, ndim=1, mode="c"] b,
                  bint relu):
    cdef int batch = x.shape[0]
    cdef int d_in = x.shape[1]
    cdef int d_out = w.shape[0]
    cdef cnp.ndarray[double, ndim=2, mode="c"] y = np.empty((batch, d_out))
    cdef Py_ssize_t i, j
    cdef double v
    with nogil:
        # y_f(d_out, B) = w_f(d_in, d_out)^T @ x_f(d_in, B)
        _gemm(b'T', b'N', d_out, batch, d_in,
              &w[0, 0], d_in, &x[0, 0], d_in, &y[0, 0], d_out)
        for i in range(batch):
            for j in range(d_out):
                v = y[i, j] + b[j]
                if relu and v < 0.0:
                    v = 0.0
                y[i, j] = v
    return y


def dense_backward(cnp.ndarray[double, ndim=2, mode="c"] x,
                   cnp.ndarray[double, ndim=2, mode="c"] y,
                   cnp.ndarray[double, ndim=2, mode="c"] w,
                   cnp.ndarray[double, ndim=2, mode="c"] dy,
                   bint relu):
    cdef int batch = x.shape[0]
    cdef int d_in = x.shape[1]
    cdef int d_out = w.shape[0]
    cdef cnp.ndarray[double, ndim=2, mode="c"] dym
    cdef cnp.ndarray[double, ndim=2, mode="c"] dw = np.empty((d_out, d_in))
    cdef cnp.ndarray[double, ndim=1, mode="c"] db = np.zeros(d_out)
    cdef cnp.ndarray[double, ndim=2, mode="c"] dx = np.empty((batch, d_in))
    cdef Py_ssize_t i, j
    if relu:
        dym = np.empty((batch, d_out))
        with nogil:
            for i in range(batch):
                for j in range(d_out):
                    dym[i, j] = dy[i, j] if y[i, j] > 0.0 else 0.0
    else:
        dym = dy
    with nogil:
        for i in range(batch):
            for j in range(d_out):
                db[j] += dym[i, j]
        # dw_f(d_in, d_out) = x_f(d_in, B) @ dy_f(d_out, B)^T
        _gemm(b'N', b'T', d_in, d_out, batch,
              &x[0, 0], d_in, &dym[0, 0], d_out, &dw[0, 0], d_in)
        # dx_f(d_in, B) = w_f(d_in, d_out) @ dy_f(d_out, B)
        _gemm(b'N', b'N', d_in, batch, d_out,
              &w[0, 0], d_in, &dym[0, 0], d_out, &dx[0, 0], d_in)
    return dx, dw, db
