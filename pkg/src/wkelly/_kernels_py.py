"""Pure numpy implementation of the per-sample kernels.

Same algorithm as the compiled extension, vectorized over rows: a
safeguarded Newton iteration on the simplex multiplier, with each
coordinate recovered through the Lambert W function.
"""
import numpy as np

MAX_W_ITER = 60
MAX_S_ITER = 200


def lambertw_log(L, w0=None):
    """Principal branch of Lambert W evaluated at ``exp(L)`` (vectorized).

    Positive entries of ``w0`` are used as warm starts.
    """
    L = np.asarray(L, dtype=float)
    scalar = L.ndim == 0
    L = np.atleast_1d(L)
    big = L > 1.0
    with np.errstate(over="ignore", divide="ignore"):
        x = np.exp(np.where(big, 0.0, L))
        w = np.where(big, L - np.log(np.where(big, L, 2.0)), x / (1.0 + x))
    if w0 is not None:
        w0 = np.atleast_1d(np.asarray(w0, dtype=float))
        w = np.where(w0 > 0, w0, w)
    live = w > 0
    for _ in range(MAX_W_ITER):
        if not live.any():
            break
        wl = w[live]
        step = (wl + np.log(wl) - L[live]) * wl / (wl + 1.0)
        wl = wl - step
        w[live] = wl
        done = np.abs(step) <= 1e-15 * wl
        idx = np.flatnonzero(live)
        live[idx[done]] = False
    return float(w[0]) if scalar else w


def solve_quad_entropy(A, beta, tol=1e-14):
    """Row-wise maximizer of ``sum v (a - log v) - beta/2 |v|^2`` over the simplex.

    See :func:`wkelly._kernels.solve_quad_entropy` for the contract.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2:
        raise ValueError("A must be 2-D")
    N, n = A.shape
    beta = np.broadcast_to(np.asarray(beta, dtype=float), (N,)).copy()
    V = np.zeros((N, n))
    S = np.zeros(N)
    if N == 0 or n == 0:
        return V, S
    fin = np.isfinite(A)
    k = fin.sum(axis=1)
    if np.any(k == 0):
        raise ValueError("row with empty support")
    Af = np.where(fin, A, -np.inf)
    amax = Af.max(axis=1)
    amin = np.where(fin, A, np.inf).min(axis=1)
    E = np.where(fin, np.exp(Af - amax[:, None]), 0.0)
    tot = E.sum(axis=1)
    s_lo = -amax - np.log(tot)
    V = E / tot[:, None]
    S = s_lo.copy()

    rows = np.flatnonzero(beta > 0)
    if rows.size == 0:
        return V, S
    b = beta[rows]
    a = A[rows]
    f = fin[rows]
    lb = np.log(b)
    lo = s_lo[rows].copy()
    hi = np.maximum(-np.log(k[rows]) + b / k[rows] - amin[rows], lo)
    s = lo.copy()
    Vr = np.zeros((rows.size, n))
    live = np.ones(rows.size, dtype=bool)
    for _ in range(MAX_S_ITER):
        idx = np.flatnonzero(live)
        if idx.size == 0:
            break
        arg = np.where(f[idx], lb[idx, None] + a[idx] + s[idx, None], 0.0)
        W = np.where(f[idx], lambertw_log(arg.ravel(), (Vr[idx] * b[idx, None]).ravel()).reshape(arg.shape), 0.0)
        v = W / b[idx, None]
        Vr[idx] = v
        phi = v.sum(axis=1) - 1.0
        dphi = (v / (1.0 + W)).sum(axis=1)
        conv = np.abs(phi) <= tol
        neg = phi < 0
        lo[idx] = np.where(neg & ~conv, s[idx], lo[idx])
        hi[idx] = np.where(~neg & ~conv, s[idx], hi[idx])
        with np.errstate(divide="ignore", invalid="ignore"):
            snew = np.where(dphi > 0, s[idx] - phi / dphi, 0.5 * (lo[idx] + hi[idx]))
        bad = ~((snew > lo[idx]) & (snew < hi[idx]))
        snew = np.where(bad, 0.5 * (lo[idx] + hi[idx]), snew)
        stuck = snew == s[idx]
        s[idx] = np.where(conv, s[idx], snew)
        live[idx[conv | stuck]] = False
    Vr /= Vr.sum(axis=1, keepdims=True)
    V[rows] = Vr
    S[rows] = s
    return V, S
