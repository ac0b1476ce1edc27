# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: polynomial stack evaluation and the RK4 geodesic loop."""

import numpy as np
cimport numpy as cnp
from libc.math cimport isfinite

cnp.import_array()

NAME = "cython"


cdef inline double _ipow(double x, long k) noexcept nogil:
    cdef double r = 1.0
    while k:
        if k & 1:
            r *= x
        x *= x
        k >>= 1
    return r


cdef void _eval_stack(const long[:, ::1] exps, const double[::1] coeffs,
                      const long[::1] offsets, const double* x,
                      double* out) noexcept nogil:
    cdef Py_ssize_t s, t, i
    cdef Py_ssize_t nstack = offsets.shape[0] - 1
    cdef Py_ssize_t nv = exps.shape[1]
    cdef double acc, term
    cdef long e
    for s in range(nstack):
        acc = 0.0
        for t in range(offsets[s], offsets[s + 1]):
            term = coeffs[t]
            for i in range(nv):
                e = exps[t, i]
                if e:
                    term *= _ipow(x[i], e)
            acc += term
        out[s] = acc


def eval_stack(const long[:, ::1] exps, const double[::1] coeffs,
               const long[::1] offsets, const double[::1] x):
    cdef Py_ssize_t k = offsets.shape[0] - 1
    out = np.zeros(k)
    cdef double[::1] o = out
    if coeffs.shape[0] == 0:
        return out
    _eval_stack(exps, coeffs, offsets, &x[0], &o[0])
    return out


def eval_stack_batch(const long[:, ::1] exps, const double[::1] coeffs,
                     const long[::1] offsets, const double[:, ::1] X):
    cdef Py_ssize_t k = offsets.shape[0] - 1
    cdef Py_ssize_t m = X.shape[0]
    cdef Py_ssize_t r
    out = np.zeros((m, k))
    cdef double[:, ::1] o = out
    if coeffs.shape[0] == 0 or m == 0:
        return out
    with nogil:
        for r in range(m):
            _eval_stack(exps, coeffs, offsets, &X[r, 0], &o[r, 0])
    return out


cdef void _rhs(const long[:, ::1] exps, const double[::1] coeffs,
               const long[::1] offsets, int n, const double* y, double* dy,
               double* jet, double* grad, double* hess, double* vel) noexcept nogil:
    cdef int m = 2 * n
    cdef int i, j, k
    cdef double alpha, phi_tau, tau_dot, alpha_dot, M, w_phi, W, xt, yt, acc
    _eval_stack(exps, coeffs, offsets, y, jet)
    alpha = jet[0]
    for i in range(m):
        grad[i] = jet[1 + i]
    k = 1 + m
    for i in range(m):
        for j in range(i, m):
            hess[i * m + j] = jet[k]
            hess[j * m + i] = jet[k]
            k += 1
    phi_tau = grad[m - 1]
    # state layout: xi[0:n], eta[n:m-1], tau[m-1], Xi[m:m+n], Eta_dot[m+n:]
    tau_dot = 2.0 * alpha * y[m]
    for j in range(1, n):
        tau_dot += y[n + j - 1] * y[m + j] - y[j] * y[m + n + j - 1]
    for i in range(n):
        vel[i] = y[m + i]
    for j in range(1, n):
        vel[n + j - 1] = y[m + n + j - 1]
    vel[m - 1] = tau_dot
    alpha_dot = 0.0
    for i in range(m):
        alpha_dot += vel[i] * grad[i]
    M = 2.0 * phi_tau * alpha_dot * y[m]
    for i in range(m):
        acc = 0.0
        for j in range(m):
            acc += hess[i * m + j] * vel[j]
        M += vel[i] * acc
    w_phi = grad[0] + 2.0 * alpha * phi_tau
    W = 1.0 + w_phi * w_phi
    for j in range(1, n):
        xt = grad[j] + y[n + j - 1] * phi_tau
        yt = grad[n + j - 1] - y[j] * phi_tau
        W += xt * xt + yt * yt
    for i in range(n):
        dy[i] = y[m + i]
    for j in range(1, n):
        dy[n + j - 1] = y[m + n + j - 1]
    dy[m - 1] = tau_dot
    dy[m] = -w_phi * M / W
    for j in range(1, n):
        xt = grad[j] + y[n + j - 1] * phi_tau
        yt = grad[n + j - 1] - y[j] * phi_tau
        dy[m + j] = -xt * M / W
        dy[m + n + j - 1] = -yt * M / W


def rk4_geodesic(const long[:, ::1] exps, const double[::1] coeffs,
                 const long[::1] offsets, int n, const double[::1] y0, double h,
                 long nsteps, const double[::1] lo, const double[::1] hi):
    cdef int m = 2 * n
    cdef Py_ssize_t dim = y0.shape[0]
    cdef Py_ssize_t nstack = offsets.shape[0] - 1
    states = np.empty((nsteps + 1, dim))
    cdef double[:, ::1] st = states
    cdef double[::1] y = np.array(y0, dtype=np.float64)
    cdef double[::1] tmp = np.empty(dim)
    cdef double[::1] k1 = np.empty(dim)
    cdef double[::1] k2 = np.empty(dim)
    cdef double[::1] k3 = np.empty(dim)
    cdef double[::1] k4 = np.empty(dim)
    cdef double[::1] jet = np.empty(nstack)
    cdef double[::1] grad = np.empty(m)
    cdef double[::1] hess = np.empty(m * m)
    cdef double[::1] vel = np.empty(m)
    cdef Py_ssize_t step, i
    cdef bint ok
    cdef double v
    for i in range(dim):
        st[0, i] = y[i]
    for step in range(nsteps):
        _rhs(exps, coeffs, offsets, n, &y[0], &k1[0], &jet[0], &grad[0], &hess[0], &vel[0])
        for i in range(dim):
            tmp[i] = y[i] + 0.5 * h * k1[i]
        _rhs(exps, coeffs, offsets, n, &tmp[0], &k2[0], &jet[0], &grad[0], &hess[0], &vel[0])
        for i in range(dim):
            tmp[i] = y[i] + 0.5 * h * k2[i]
        _rhs(exps, coeffs, offsets, n, &tmp[0], &k3[0], &jet[0], &grad[0], &hess[0], &vel[0])
        for i in range(dim):
            tmp[i] = y[i] + h * k3[i]
        _rhs(exps, coeffs, offsets, n, &tmp[0], &k4[0], &jet[0], &grad[0], &hess[0], &vel[0])
        ok = True
        for i in range(dim):
            v = y[i] + (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
            if not isfinite(v):
                raise FloatingPointError(f"non-finite geodesic state after step {step + 1}")
            tmp[i] = v
        for i in range(m):
            if tmp[i] < lo[i] or tmp[i] > hi[i]:
                ok = False
        if not ok:
            return states, step, True
        for i in range(dim):
            y[i] = tmp[i]
            st[step + 1, i] = tmp[i]
    return states, nsteps, False
