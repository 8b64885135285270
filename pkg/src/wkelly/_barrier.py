"""Log-barrier Newton method for concave maximization over the simplex.

Variables are ``z = (w, extra)`` where ``w`` lies on the probability simplex
and the optional scalar ``extra`` (the robust multiplier) is bounded below.
Each centering step solves the equality-constrained Newton system in
coordinates scaled by the distance to the bounds, which keeps the system
well conditioned as iterates approach the boundary.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

# fun(z, order) -> (value, grad, hess-or-None); value = -inf outside the domain
Objective = Callable[[np.ndarray, int], tuple]


@dataclass
class BarrierResult:
    z: np.ndarray
    value: float
    grad: np.ndarray
    converged: bool
    iterations: int
    gap_bound: float
    t: float


def fd_hessian(fun: Objective, z: np.ndarray, dist: np.ndarray, rel: float = 1e-6) -> np.ndarray:
    m = z.size
    H = np.empty((m, m))
    for k in range(m):
        h = rel * max(dist[k], 1e-300)
        e = np.zeros(m)
        e[k] = h
        gp = fun(z + e, 1)[1]
        gm = fun(z - e, 1)[1]
        H[:, k] = (gp - gm) / (2.0 * h)
    return 0.5 * (H + H.T)


def maximize(
    fun: Objective,
    z0: np.ndarray,
    n_simplex: int,
    lower: np.ndarray,
    gap_target: float,
    max_iter: int = 10000,
    analytic_hessian: bool = True,
    t0: float = 1.0,
    mu: float = 10.0,
    newton_tol: float = 1e-9,
) -> BarrierResult:
    """Maximize concave ``fun`` with ``z[:n_simplex]`` on the simplex and ``z > lower``.

    Stops once the barrier bound ``m / t`` falls below ``gap_target``.  The
    reported ``gap_bound`` bounds the suboptimality of the returned point.
    """
    z = np.array(z0, dtype=float)
    lower = np.asarray(lower, dtype=float)
    m = z.size
    a = np.zeros(m)
    a[:n_simplex] = 1.0
    t = t0
    iters = 0
    last_dec = math.inf

    def barrier_value(zz, F):
        return t * F + np.log(zz - lower).sum()

    val, grad, H = fun(z, 2 if analytic_hessian else 1)
    if not math.isfinite(val):
        raise ValueError("starting point outside the objective domain")

    while True:
        # centering at the current t
        while iters < max_iter:
            iters += 1
            d = z - lower
            if not analytic_hessian:
                H = fd_hessian(fun, z, d)
            gt = t * d * grad + 1.0
            M = t * (d[:, None] * H * d[None, :]) - np.eye(m)
            Da = d * a
            K = np.zeros((m + 1, m + 1))
            K[:m, :m] = M
            K[:m, m] = K[m, :m] = Da
            rhs = np.append(-gt, 0.0)
            try:
                sol = np.linalg.solve(K, rhs)
            except np.linalg.LinAlgError:
                sol = np.linalg.lstsq(K, rhs, rcond=None)[0]
            y = sol[:m]
            # quadratic form rather than gt.y: gt carries a large component
            # normal to the simplex that the multiplier absorbs
            dec2 = float(-(y @ M @ y))
            last_dec = dec2
            if dec2 <= 2.0 * newton_tol:
                break
            neg = y < 0
            step = min(1.0, 0.99 / float(np.max(-y[neg]))) if neg.any() else 1.0
            B0 = barrier_value(z, val)
            accepted = False
            for _ in range(60):
                zn = z + step * d * y
                if np.all(zn > lower):
                    vn, gn, Hn = fun(zn, 2 if analytic_hessian else 1)
                    if math.isfinite(vn):
                        Bn = barrier_value(zn, vn)
                        if Bn >= B0 + 0.25 * step * dec2 or (Bn >= B0 and step * dec2 < 1e-6):
                            accepted = True
                            break
                step *= 0.5
            if not accepted:
                break
            z, val, grad, H = zn, vn, gn, Hn
            if n_simplex:
                # re-project rounding drift off the simplex plane
                s = z[:n_simplex].sum()
                z[:n_simplex] /= s
        bound = (m + max(last_dec, 0.0) / 2.0) / t
        if bound <= gap_target or iters >= max_iter:
            if n_simplex:
                val, grad, H = fun(z, 2 if analytic_hessian else 1)
            return BarrierResult(z, val, grad, bound <= gap_target, iters, bound, t)
        t *= mu
