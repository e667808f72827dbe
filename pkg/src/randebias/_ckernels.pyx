# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels for the per-word optimizer; mirrors ``_pykernels``.

The Adam loop runs without the GIL so several words can be optimized on
separate threads.
"""
import numpy as np

from libc.math cimport sqrt, fabs, isfinite
from libc.stdlib cimport malloc, free
from libc.string cimport memcpy

cdef enum:
    C_OK = 0
    C_DIVERGED = 1

OK = C_OK
DIVERGED = C_DIVERGED


cdef inline double _sign(double v) noexcept nogil:
    if v > 0.0:
        return 1.0
    if v < 0.0:
        return -1.0
    return 0.0


cdef int _objgrad(const double* x, const double* w, const double* members, Py_ssize_t m,
                  const double* g, Py_ssize_t h, double l_r, double l_a, double l_n,
                  double* xn, double* grad, double* f_out) noexcept nogil:
    """Objective and gradient at ``x``; returns -1 if ``x`` is the zero vector."""
    cdef Py_ssize_t i, k
    cdef double r = 0.0, c, s, sc, coef, cw, cg, f = 0.0
    cdef const double* a
    for k in range(h):
        r += x[k] * x[k]
    r = sqrt(r)
    if r == 0.0:
        return -1
    for k in range(h):
        xn[k] = x[k] / r
        grad[k] = 0.0

    if m > 0 and l_r != 0.0:
        sc = 0.0
        coef = l_r / (m * r)
        for i in range(m):
            a = members + i * h
            c = 0.0
            for k in range(h):
                c += a[k] * xn[k]
            s = _sign(c)
            f += fabs(c)
            sc += s * c
            if s != 0.0:
                for k in range(h):
                    grad[k] += coef * s * a[k]
        f = l_r * f / m
        for k in range(h):
            grad[k] -= coef * sc * xn[k]

    if l_a != 0.0:
        cw = 0.0
        for k in range(h):
            cw += xn[k] * w[k]
        f += l_a * fabs(cw - 1.0) / 2.0
        coef = l_a * _sign(cw - 1.0) / (2.0 * r)
        for k in range(h):
            grad[k] += coef * (w[k] - cw * xn[k])

    if l_n != 0.0:
        cg = 0.0
        for k in range(h):
            cg += xn[k] * g[k]
        f += l_n * fabs(cg)
        coef = l_n * _sign(cg) / r
        for k in range(h):
            grad[k] += coef * (g[k] - cg * xn[k])

    f_out[0] = f
    return 0


def objective_and_gradient(x, w, members, g, lam):
    cdef const double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef const double[::1] wv = np.ascontiguousarray(w, dtype=np.float64)
    cdef const double[::1] gv = np.ascontiguousarray(g, dtype=np.float64)
    cdef const double[:, ::1] mv = np.ascontiguousarray(members, dtype=np.float64).reshape(-1, xv.shape[0])
    cdef Py_ssize_t h = xv.shape[0]
    cdef double[::1] xn = np.empty(h)
    grad = np.empty(h)
    cdef double[::1] gr = grad
    cdef double f = 0.0
    cdef const double* mp = &mv[0, 0] if mv.shape[0] > 0 else NULL
    if _objgrad(&xv[0], &wv[0], mp, mv.shape[0], &gv[0], h,
                lam[0], lam[1], lam[2], &xn[0], &gr[0], &f) != 0:
        raise ValueError("zero vector")
    return f, grad


def adam_minimize(w, members, g, lam, double lr, double beta1, double beta2, double eps,
                  int max_steps, double tol):
    """Adam from ``x = w``; returns ``(best_x, f_initial, f_best, steps, status)``."""
    cdef const double[::1] wv = np.ascontiguousarray(w, dtype=np.float64)
    cdef const double[::1] gv = np.ascontiguousarray(g, dtype=np.float64)
    cdef Py_ssize_t h = wv.shape[0]
    cdef const double[:, ::1] mv = np.ascontiguousarray(members, dtype=np.float64).reshape(-1, h)
    cdef Py_ssize_t m = mv.shape[0]
    cdef const double* mp = &mv[0, 0] if m > 0 else NULL
    cdef double l_r = lam[0], l_a = lam[1], l_n = lam[2]

    best_arr = np.array(wv, dtype=np.float64)
    cdef double[::1] best = best_arr
    cdef double* x = <double*> malloc(5 * h * sizeof(double))
    if x == NULL:
        raise MemoryError()
    cdef double* m1 = x + h
    cdef double* m2 = x + 2 * h
    cdef double* grad = x + 3 * h
    cdef double* xn = x + 4 * h

    cdef double f = 0.0, f0, f_best, f_prev, b1t = 1.0, b2t = 1.0, mh, vh
    cdef int t, steps = 0, status = C_OK, rc
    cdef Py_ssize_t k
    cdef bint any_nonzero, finite

    with nogil:
        memcpy(x, &wv[0], h * sizeof(double))
        for k in range(h):
            m1[k] = 0.0
            m2[k] = 0.0
        rc = _objgrad(x, &wv[0], mp, m, &gv[0], h, l_r, l_a, l_n, xn, grad, &f)
        f0 = f
        f_best = f
        f_prev = f
        if rc != 0:
            status = -1
        else:
            for t in range(1, max_steps + 1):
                b1t *= beta1
                b2t *= beta2
                finite = True
                any_nonzero = False
                for k in range(h):
                    m1[k] = beta1 * m1[k] + (1.0 - beta1) * grad[k]
                    m2[k] = beta2 * m2[k] + (1.0 - beta2) * grad[k] * grad[k]
                    mh = m1[k] / (1.0 - b1t)
                    vh = m2[k] / (1.0 - b2t)
                    x[k] = x[k] - lr * mh / (sqrt(vh) + eps)
                    if not isfinite(x[k]):
                        finite = False
                    if x[k] != 0.0:
                        any_nonzero = True
                steps = t
                if not finite or not any_nonzero:
                    status = C_DIVERGED
                    break
                _objgrad(x, &wv[0], mp, m, &gv[0], h, l_r, l_a, l_n, xn, grad, &f)
                if not isfinite(f):
                    status = C_DIVERGED
                    break
                if f < f_best:
                    f_best = f
                    memcpy(&best[0], x, h * sizeof(double))
                if fabs(f_prev - f) < tol:
                    break
                f_prev = f
    free(x)
    if status == -1:
        raise ValueError("zero vector")
    return best_arr, f0, f_best, steps, status
