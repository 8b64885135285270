# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled per-sample kernels.

Mirrors :mod:`wkelly._kernels_py` exactly; the test-suite checks both
backends against each other.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp, log, fabs, INFINITY, isfinite

cnp.import_array()

cdef int MAX_W_ITER = 60
cdef int MAX_S_ITER = 200


cdef inline double _lambertw_log(double L, double w0=0.0) nogil:
    # principal W(x) for x = exp(L) > 0, from the log of the argument;
    # w0 > 0 is a warm start
    cdef double w, x, step
    cdef int it
    if w0 > 0.0:
        w = w0
    elif L > 1.0:
        w = L - log(L)
    else:
        x = exp(L)
        w = x / (1.0 + x)
        if w == 0.0:
            return 0.0
    for it in range(MAX_W_ITER):
        step = (w + log(w) - L) * w / (w + 1.0)
        w -= step
        if fabs(step) <= 1e-15 * w:
            break
    return w


def lambertw_log(double L):
    """Principal branch of Lambert W evaluated at ``exp(L)``."""
    return _lambertw_log(L)


cdef int _solve_row(const double* a, double beta, Py_ssize_t n,
                    double* v, double* s_out, double tol) nogil:
    cdef Py_ssize_t i
    cdef int k = 0, it
    cdef double amax = -INFINITY, amin = INFINITY, tot, s, s_lo, s_hi, phi, dphi
    cdef double lb, wi, snew
    # v doubles as the warm-start buffer for W = beta * v
    for i in range(n):
        if isfinite(a[i]):
            k += 1
            if a[i] > amax:
                amax = a[i]
            if a[i] < amin:
                amin = a[i]
    if k == 0:
        return -1
    tot = 0.0
    for i in range(n):
        if isfinite(a[i]):
            v[i] = exp(a[i] - amax)
            tot += v[i]
        else:
            v[i] = 0.0
    s_lo = -amax - log(tot)
    if beta == 0.0:
        for i in range(n):
            v[i] /= tot
        s_out[0] = s_lo
        return 0
    lb = log(beta)
    s_hi = -log(<double>k) + beta / k - amin
    if s_hi < s_lo:
        s_hi = s_lo
    s = s_lo
    for i in range(n):
        v[i] = 0.0
    for it in range(MAX_S_ITER):
        phi = -1.0
        dphi = 0.0
        for i in range(n):
            if isfinite(a[i]):
                wi = _lambertw_log(lb + a[i] + s, v[i] * beta)
                v[i] = wi / beta
                phi += v[i]
                dphi += v[i] / (1.0 + wi)
        if fabs(phi) <= tol:
            break
        if phi < 0.0:
            s_lo = s
        else:
            s_hi = s
        if dphi > 0.0:
            snew = s - phi / dphi
        else:
            snew = 0.5 * (s_lo + s_hi)
        if not (snew > s_lo and snew < s_hi):
            snew = 0.5 * (s_lo + s_hi)
        if snew == s:
            break
        s = snew
    tot = 0.0
    for i in range(n):
        tot += v[i]
    for i in range(n):
        v[i] /= tot
    s_out[0] = s
    return 0


def solve_quad_entropy(A, beta, double tol=1e-14):
    """Row-wise maximizer of ``sum v (a - log v) - beta/2 |v|^2`` over the simplex.

    Parameters
    ----------
    A : (N, n) array
        Row ``j`` holds ``a_j``; ``-inf`` entries pin ``v_ji = 0``.
    beta : float or (N,) array
        Non-negative quadratic coefficient per row.

    Returns
    -------
    V : (N, n) array
    S : (N,) array
        Shift with ``log v_i + beta v_i = a_i + s`` on the support.
    """
    Ac = np.ascontiguousarray(A, dtype=np.float64)
    cdef Py_ssize_t N = Ac.shape[0], n = Ac.shape[1], j
    B = np.ascontiguousarray(
        np.broadcast_to(np.asarray(beta, dtype=np.float64), (N,)))
    cdef cnp.ndarray[double, ndim=2, mode="c"] V = np.empty((N, n), dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1, mode="c"] S = np.empty(N, dtype=np.float64)
    cdef const double[:, ::1] Av = Ac
    cdef double[:, ::1] Vv = V
    cdef const double[::1] Bv = B
    cdef double[::1] Sv = S
    cdef int bad = 0
    if N == 0 or n == 0:
        return V, S
    with nogil:
        for j in range(N):
            if _solve_row(&Av[j, 0], Bv[j], n, &Vv[j, 0], &Sv[j], tol) != 0:
                bad = 1
    if bad:
        raise ValueError("row with empty support")
    return V, S
