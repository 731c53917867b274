# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: 5-point stencil application and the shifted-system
CG loop.  Mirrors `_fallback` exactly in signatures and semantics."""

from libc.math cimport sqrt

import numpy as np

CG_CONVERGED = 0
CG_MAXITER = 1
CG_BREAKDOWN = 2

cdef int _ST_CONVERGED = 0
cdef int _ST_MAXITER = 1
cdef int _ST_BREAKDOWN = 2


cdef inline void _apply_shifted(const double[:, ::1] y, double[:, ::1] out,
                                double c1, double c0,
                                double ih1, double ih2) noexcept nogil:
    cdef Py_ssize_t n1 = y.shape[0]
    cdef Py_ssize_t n2 = y.shape[1]
    cdef Py_ssize_t i, j
    cdef double diag = 2.0 * (ih1 + ih2)
    cdef double v
    for i in range(n1):
        for j in range(n2):
            v = diag * y[i, j]
            if i > 0:
                v -= ih1 * y[i - 1, j]
            if i < n1 - 1:
                v -= ih1 * y[i + 1, j]
            if j > 0:
                v -= ih2 * y[i, j - 1]
            if j < n2 - 1:
                v -= ih2 * y[i, j + 1]
            out[i, j] = c1 * v + c0 * y[i, j]


cdef inline double _dot(const double[:, ::1] a, const double[:, ::1] b) noexcept nogil:
    cdef Py_ssize_t n1 = a.shape[0]
    cdef Py_ssize_t n2 = a.shape[1]
    cdef Py_ssize_t i, j
    cdef double s = 0.0
    for i in range(n1):
        for j in range(n2):
            s += a[i, j] * b[i, j]
    return s


def apply_laplacian(const double[:, ::1] y, double[:, ::1] out, double ih1, double ih2):
    """out = A y: 5-point minus-Laplacian, zero Dirichlet neighbors outside."""
    with nogil:
        _apply_shifted(y, out, 1.0, 0.0, ih1, ih2)
    return np.asarray(out)


def apply_shifted(const double[:, ::1] y, double[:, ::1] out,
                  double c1, double c0, double ih1, double ih2):
    """out = c1*(A y) + c0*y."""
    with nogil:
        _apply_shifted(y, out, c1, c0, ih1, ih2)
    return np.asarray(out)


def shifted_cg(double[:, ::1] x, const double[:, ::1] b,
               double c1, double c0, double ih1, double ih2,
               double rel_tol, long max_iter):
    """Conjugate gradients on (c1*A + c0*E) x = b.

    x carries the initial guess on entry and the solution on exit.
    Returns (status, iterations, relative_residual).
    """
    cdef Py_ssize_t n1 = x.shape[0]
    cdef Py_ssize_t n2 = x.shape[1]
    cdef Py_ssize_t i, j
    cdef double b_norm, rr, rr_new, rel, pq, alpha, beta
    cdef long k
    cdef int status

    r_arr = np.empty((n1, n2), dtype=np.float64)
    p_arr = np.empty((n1, n2), dtype=np.float64)
    q_arr = np.empty((n1, n2), dtype=np.float64)
    cdef double[:, ::1] r = r_arr
    cdef double[:, ::1] p = p_arr
    cdef double[:, ::1] q = q_arr

    with nogil:
        b_norm = sqrt(_dot(b, b))
        if b_norm == 0.0:
            for i in range(n1):
                for j in range(n2):
                    x[i, j] = 0.0
            with gil:
                return _ST_CONVERGED, 0, 0.0

        _apply_shifted(x, q, c1, c0, ih1, ih2)
        rr = 0.0
        for i in range(n1):
            for j in range(n2):
                r[i, j] = b[i, j] - q[i, j]
                rr += r[i, j] * r[i, j]
        rel = sqrt(rr) / b_norm
        if rel <= rel_tol:
            with gil:
                return _ST_CONVERGED, 0, rel

        for i in range(n1):
            for j in range(n2):
                p[i, j] = r[i, j]

        status = _ST_MAXITER
        k = 0
        while k < max_iter:
            k += 1
            _apply_shifted(p, q, c1, c0, ih1, ih2)
            pq = _dot(p, q)
            if pq <= 0.0:
                status = _ST_BREAKDOWN
                break
            alpha = rr / pq
            rr_new = 0.0
            for i in range(n1):
                for j in range(n2):
                    x[i, j] += alpha * p[i, j]
                    r[i, j] -= alpha * q[i, j]
                    rr_new += r[i, j] * r[i, j]
            rel = sqrt(rr_new) / b_norm
            if rel <= rel_tol:
                status = _ST_CONVERGED
                break
            beta = rr_new / rr
            for i in range(n1):
                for j in range(n2):
                    p[i, j] = r[i, j] + beta * p[i, j]
            rr = rr_new

    return status, k, rel
