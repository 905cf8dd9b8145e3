# cython: language_level=3
"""Compiled implementation of the hot loops.

Same interface as the numpy fallback. The per-sample gradient of each
problem family lives in one cdef routine used by both the local pass and
the full-dataset evaluation, so the two agree bitwise sample by sample.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, log1p

cnp.import_array()


# -- quadratic ----------------------------------------------------------------

cdef inline void _quad_grad_one(
    const double[:, :, :, ::1] H, const double[:, :, ::1] c,
    Py_ssize_t m, Py_ssize_t i, const double* x, double* g, Py_ssize_t d
) noexcept nogil:
    cdef Py_ssize_t r, j
    cdef double acc
    for r in range(d):
        acc = 0.0
        for j in range(d):
            acc += H[m, i, r, j] * (x[j] - c[m, i, j])
        g[r] = acc


cdef inline double _quad_value_one(
    const double[:, :, :, ::1] H, const double[:, :, ::1] c,
    Py_ssize_t m, Py_ssize_t i, const double* x, double* g, Py_ssize_t d
) noexcept nogil:
    # fills g and returns the sample value 0.5 * diff^T g
    cdef Py_ssize_t r
    cdef double acc = 0.0
    _quad_grad_one(H, c, m, i, x, g, d)
    for r in range(d):
        acc += (x[r] - c[m, i, r]) * g[r]
    return 0.5 * acc


def quad_value_grad(const double[:, :, :, ::1] hessians,
                    const double[:, :, ::1] centers,
                    const double[::1] x):
    cdef Py_ssize_t M = centers.shape[0], n = centers.shape[1], d = centers.shape[2]
    cdef Py_ssize_t m, i, r
    cdef double fsum = 0.0
    grad_arr = np.zeros(d)
    work_arr = np.empty(d)
    cdef double[::1] grad = grad_arr
    cdef double[::1] work = work_arr
    with nogil:
        for m in range(M):
            for i in range(n):
                fsum += _quad_value_one(hessians, centers, m, i, &x[0], &work[0], d)
                for r in range(d):
                    grad[r] += work[r]
    cdef double scale = 1.0 / (M * n)
    for r in range(d):
        grad[r] *= scale
    return fsum * scale, grad_arr


def quad_pass(const double[:, :, :, ::1] hessians,
              const double[:, :, ::1] centers,
              const cnp.int64_t[::1] clients,
              const cnp.int64_t[:, ::1] idx,
              const double[::1] x0,
              double gamma):
    cdef Py_ssize_t C = idx.shape[0], n = idx.shape[1], d = x0.shape[0]
    cdef Py_ssize_t ci, i, r, m, s
    ends_arr = np.empty((C, d))
    gs_arr = np.zeros((C, d))
    work_arr = np.empty(d)
    cdef double[:, ::1] ends = ends_arr
    cdef double[:, ::1] gs = gs_arr
    cdef double[::1] work = work_arr
    with nogil:
        for ci in range(C):
            m = clients[ci]
            for r in range(d):
                ends[ci, r] = x0[r]
            for i in range(n):
                s = idx[ci, i]
                _quad_grad_one(hessians, centers, m, s, &ends[ci, 0], &work[0], d)
                for r in range(d):
                    gs[ci, r] += work[r]
                    ends[ci, r] -= gamma * work[r]
            for r in range(d):
                gs[ci, r] /= n
    return ends_arr, gs_arr


# -- logistic -----------------------------------------------------------------

cdef inline double _dot(const double* a, const double* b, Py_ssize_t d) noexcept nogil:
    cdef Py_ssize_t j
    cdef double acc = 0.0
    for j in range(d):
        acc += a[j] * b[j]
    return acc


cdef inline double _sigmoid_of_neg(double z) noexcept nogil:
    # 1 / (1 + exp(z)) without overflow
    cdef double e
    if z >= 0.0:
        e = exp(-z)
        return e / (1.0 + e)
    e = exp(z)
    return 1.0 / (1.0 + e)


cdef inline void _logreg_grad_one(
    const double[:, :, ::1] A, const double[:, ::1] y,
    Py_ssize_t m, Py_ssize_t i, const double* x, double lam,
    double* g, Py_ssize_t d
) noexcept nogil:
    cdef double z = y[m, i] * _dot(&A[m, i, 0], x, d)
    cdef double coef = -(y[m, i] * _sigmoid_of_neg(z))
    cdef Py_ssize_t r
    for r in range(d):
        g[r] = coef * A[m, i, r] + lam * x[r]


cdef inline double _logreg_value_one(
    const double[:, :, ::1] A, const double[:, ::1] y,
    Py_ssize_t m, Py_ssize_t i, const double* x, double lam,
    double half_lam_xsq, Py_ssize_t d
) noexcept nogil:
    cdef double z = y[m, i] * _dot(&A[m, i, 0], x, d)
    # log(1 + exp(-z)) computed on the non-overflowing side
    cdef double v
    if z >= 0.0:
        v = log1p(exp(-z))
    else:
        v = -z + log1p(exp(z))
    return v + half_lam_xsq


def logreg_value_grad(const double[:, :, ::1] features,
                      const double[:, ::1] labels,
                      double lam,
                      const double[::1] x):
    cdef Py_ssize_t M = features.shape[0], n = features.shape[1], d = features.shape[2]
    cdef Py_ssize_t m, i, r
    cdef double fsum = 0.0
    cdef double half_lam_xsq = 0.5 * lam * _dot(&x[0], &x[0], d)
    grad_arr = np.zeros(d)
    work_arr = np.empty(d)
    cdef double[::1] grad = grad_arr
    cdef double[::1] work = work_arr
    with nogil:
        for m in range(M):
            for i in range(n):
                fsum += _logreg_value_one(features, labels, m, i, &x[0], lam,
                                          half_lam_xsq, d)
                _logreg_grad_one(features, labels, m, i, &x[0], lam, &work[0], d)
                for r in range(d):
                    grad[r] += work[r]
    cdef double scale = 1.0 / (M * n)
    for r in range(d):
        grad[r] *= scale
    return fsum * scale, grad_arr


def logreg_pass(const double[:, :, ::1] features,
                const double[:, ::1] labels,
                double lam,
                const cnp.int64_t[::1] clients,
                const cnp.int64_t[:, ::1] idx,
                const double[::1] x0,
                double gamma):
    cdef Py_ssize_t C = idx.shape[0], n = idx.shape[1], d = x0.shape[0]
    cdef Py_ssize_t ci, i, r, m, s
    ends_arr = np.empty((C, d))
    gs_arr = np.zeros((C, d))
    work_arr = np.empty(d)
    cdef double[:, ::1] ends = ends_arr
    cdef double[:, ::1] gs = gs_arr
    cdef double[::1] work = work_arr
    with nogil:
        for ci in range(C):
            m = clients[ci]
            for r in range(d):
                ends[ci, r] = x0[r]
            for i in range(n):
                s = idx[ci, i]
                _logreg_grad_one(features, labels, m, s, &ends[ci, 0], lam,
                                 &work[0], d)
                for r in range(d):
                    gs[ci, r] += work[r]
                    ends[ci, r] -= gamma * work[r]
            for r in range(d):
                gs[ci, r] /= n
    return ends_arr, gs_arr


# -- rational -----------------------------------------------------------------

cdef inline void _rat_grad_one(
    const double[:, :, ::1] A, const double[:, ::1] b,
    Py_ssize_t m, Py_ssize_t i, const double* x, double* g, Py_ssize_t d
) noexcept nogil:
    cdef double s = _dot(&A[m, i, 0], x, d) - b[m, i]
    cdef double q = 1.0 + s * s
    cdef double coef = 2.0 * s / (q * q)
    cdef Py_ssize_t r
    for r in range(d):
        g[r] = coef * A[m, i, r]


def rat_value_grad(const double[:, :, ::1] slopes,
                   const double[:, ::1] offsets,
                   const double[::1] x):
    cdef Py_ssize_t M = slopes.shape[0], n = slopes.shape[1], d = slopes.shape[2]
    cdef Py_ssize_t m, i, r
    cdef double fsum = 0.0, s
    grad_arr = np.zeros(d)
    work_arr = np.empty(d)
    cdef double[::1] grad = grad_arr
    cdef double[::1] work = work_arr
    with nogil:
        for m in range(M):
            for i in range(n):
                s = _dot(&slopes[m, i, 0], &x[0], d) - offsets[m, i]
                fsum += s * s / (1.0 + s * s)
                _rat_grad_one(slopes, offsets, m, i, &x[0], &work[0], d)
                for r in range(d):
                    grad[r] += work[r]
    cdef double scale = 1.0 / (M * n)
    for r in range(d):
        grad[r] *= scale
    return fsum * scale, grad_arr


def rat_pass(const double[:, :, ::1] slopes,
             const double[:, ::1] offsets,
             const cnp.int64_t[::1] clients,
             const cnp.int64_t[:, ::1] idx,
             const double[::1] x0,
             double gamma):
    cdef Py_ssize_t C = idx.shape[0], n = idx.shape[1], d = x0.shape[0]
    cdef Py_ssize_t ci, i, r, m, s
    ends_arr = np.empty((C, d))
    gs_arr = np.zeros((C, d))
    work_arr = np.empty(d)
    cdef double[:, ::1] ends = ends_arr
    cdef double[:, ::1] gs = gs_arr
    cdef double[::1] work = work_arr
    with nogil:
        for ci in range(C):
            m = clients[ci]
            for r in range(d):
                ends[ci, r] = x0[r]
            for i in range(n):
                s = idx[ci, i]
                _rat_grad_one(slopes, offsets, m, s, &ends[ci, 0], &work[0], d)
                for r in range(d):
                    gs[ci, r] += work[r]
                    ends[ci, r] -= gamma * work[r]
            for r in range(d):
                gs[ci, r] /= n
    return ends_arr, gs_arr
