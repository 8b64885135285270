"""Brute-force evaluation of the worst-case growth rate at a fixed portfolio.

Everything here is computed by generic numerical optimization (scipy's
BFGS / SLSQP and a golden-section search), deliberately sharing no code with
the structured solver in :mod:`wkelly.robust`.  The two routes are compared
to certify solutions.

Two routes to the per-sample worst case are provided and must agree:

* :func:`inner_min_value` minimizes ``log(exp(r).w) + lam |r - rhat|^p``
  directly over ``r``;
* :func:`conjugate_inner_value` maximizes the conjugate form over the
  simplex of ``v``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize
from scipy.special import logsumexp

from .domain import (BallSpec, ExtReal, Norm, ReturnKind, ReturnsMatrix, Unbounded,
                     ext_to_float)
from .errors import BracketTooNarrow, DimensionMismatch, NumericFailure, UnsupportedOrder, ValidationError

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def _lse(z: np.ndarray) -> float:
    # scipy's logsumexp carries heavy per-call overhead on short vectors
    m = float(np.max(z))
    return m + math.log(float(np.sum(np.exp(z - m))))


@dataclass(frozen=True)
class InnerEvalConfig:
    r_grid_halfwidth: float = 2.0
    coord_tol: float = 1e-9
    lambda_bracket: tuple = (1e-6, 1e6)
    max_expansions: int = 3

    def __post_init__(self):
        lo, hi = self.lambda_bracket
        if not self.r_grid_halfwidth > 0:
            raise ValidationError("r_grid_halfwidth must be positive")
        if not (0 < lo < hi):
            raise ValidationError("lambda_bracket must be ordered and positive")


def _weights(w) -> np.ndarray:
    w = np.asarray(w, dtype=float).ravel()
    if np.any(w < -1e-12) or abs(w.sum() - 1.0) > 1e-8:
        raise ValidationError("w must lie on the simplex")
    return np.clip(w, 0.0, None)


def _log_payoff(r: np.ndarray, logw: np.ndarray) -> float:
    return _lse(r + logw)


def _min_norm_on_support(norm: Norm, k: int) -> float:
    """``|1_S|`` for a support of size k; ``1/|1_S|`` is the smallest dual norm on the simplex."""
    if norm is Norm.L2:
        return math.sqrt(k)
    if norm is Norm.L1:
        return float(k)
    return 1.0


# --------------------------------------------------------------------------
# primal route
# --------------------------------------------------------------------------

def inner_min_value(w, lam: float, rhat, ball: BallSpec,
                    cfg: InnerEvalConfig | None = None) -> ExtReal:
    """``inf_r log(sum_i w_i e^{r_i}) + lam |r - rhat|^p`` by numerical minimization."""
    cfg = cfg or InnerEvalConfig()
    w = _weights(w)
    rhat = np.asarray(rhat, dtype=float).ravel()
    if rhat.shape != w.shape:
        raise DimensionMismatch("rhat and w differ in length")
    if lam < 0:
        raise ValidationError("lambda must be >= 0")
    S = np.flatnonzero(w > 0)
    k = S.size
    logw = np.log(w[S])
    r0 = rhat[S]
    f0 = _log_payoff(r0, logw)
    if math.isinf(lam):
        return f0
    if lam == 0.0:
        return Unbounded.BELOW
    p = ball.p
    norm = ball.norm
    if p == 1.0 and lam * _min_norm_on_support(norm, k) < 1.0:
        return Unbounded.BELOW

    def f_and_grad(d):
        z = r0 + d + logw
        L = _lse(z)
        return L, np.exp(z - L)

    starts = [np.zeros(k)]
    g0 = f_and_grad(np.zeros(k))[1]
    if p > 1.0:
        gn = ball.dual_norm(g0)
        rad = (gn / (p * lam)) ** (1.0 / (p - 1.0))
        starts.append(-np.full(k, min(rad, cfg.r_grid_halfwidth) / _min_norm_on_support(norm, k)))
    else:
        starts.append(-np.full(k, 0.1 * cfg.r_grid_halfwidth))

    if norm is Norm.L2 and p > 1.0:
        best = _min_smooth_l2(f_and_grad, lam, p, starts, cfg)
    elif norm is Norm.L1:
        best = _min_l1(f_and_grad, lam, p, starts, cfg)
    else:
        best = _min_epigraph(f_and_grad, lam, p, norm, starts, cfg)
    if p == 1.0:
        best = min(best, f0)  # d = 0 is a kink; its value is exact
    return best


def _min_smooth_l2(fg, lam, p, starts, cfg):
    def obj(d):
        L, g = fg(d)
        nd = math.sqrt(float(d @ d))
        val = L + lam * nd ** p
        grad = g + (lam * p * nd ** (p - 2.0) * d if nd > 0 else 0.0)
        return val, grad

    best = math.inf
    for x0 in starts:
        res = minimize(obj, x0, jac=True, method="BFGS",
                       options={"gtol": 1e-13, "maxiter": 2000})
        best = min(best, _polish_l2(obj, res.x, lam, p))
    if not math.isfinite(best):
        raise NumericFailure("inner minimization did not converge")
    return best


def _polish_l2(obj, x, lam, p):
    # a few damped gradient steps guard against early BFGS termination
    val, g = obj(x)
    for _ in range(20):
        if np.linalg.norm(g) < 1e-14:
            break
        step = 1.0
        while step > 1e-12:
            xn = x - step * g
            vn, gn = obj(xn)
            if vn < val:
                x, val, g = xn, vn, gn
                break
            step *= 0.5
        else:
            break
    return val


def _min_l1(fg, lam, p, starts, cfg):
    k = starts[0].size

    def obj(x):
        dp, dm = x[:k], x[k:]
        L, g = fg(dp - dm)
        t = float(x.sum())
        pen = lam * t ** p
        dpen = lam * p * t ** (p - 1.0) if t > 0 else (lam if p == 1.0 else 0.0)
        return L + pen, np.concatenate([g + dpen, -g + dpen])

    best = math.inf
    for d0 in starts:
        x0 = np.concatenate([np.maximum(d0, 0), np.maximum(-d0, 0)])
        # ftol = 0: stop on the projected gradient only; a warm restart
        # discards the stale curvature pairs
        for _ in range(3):
            res = minimize(obj, x0, jac=True, method="L-BFGS-B", bounds=[(0, None)] * (2 * k),
                           options={"ftol": 0.0, "gtol": 1e-14, "maxiter": 5000})
            improved = float(res.fun) < best - 1e-16
            best = min(best, float(res.fun))
            x0 = res.x
            if not improved:
                break
    return best


def _min_epigraph(fg, lam, p, norm, starts, cfg):
    k = starts[0].size

    def obj(x):
        L, g = fg(x[:k])
        t = max(x[k], 0.0)
        return L + lam * t ** p, np.append(g, lam * p * t ** (p - 1.0) if t > 0 or p == 1.0 else 0.0)

    if norm is Norm.LINF:
        A = np.zeros((2 * k, k + 1))
        A[:k, :k] = -np.eye(k)
        A[k:, :k] = np.eye(k)
        A[:, k] = 1.0
        cons = [{"type": "ineq", "fun": lambda x: A @ x, "jac": lambda x: A}]
    else:
        def cfun(x):
            return np.array([x[k] - math.sqrt(float(x[:k] @ x[:k]) + 1e-300)])

        def cjac(x):
            nd = math.sqrt(float(x[:k] @ x[:k]) + 1e-300)
            return np.append(-x[:k] / nd, 1.0)[None, :]

        cons = [{"type": "ineq", "fun": cfun, "jac": cjac}]
    best = math.inf
    for d0 in starts:
        x0 = np.append(d0, norm(d0) + 1e-12)
        res = minimize(obj, x0, jac=True, method="SLSQP", constraints=cons,
                       bounds=[(None, None)] * k + [(0, None)],
                       options={"ftol": 1e-15, "maxiter": 1000})
        x = res.x
        # evaluate at the projected feasible point
        d = x[:k]
        val = fg(d)[0] + lam * norm(d) ** p
        best = min(best, val)
    return best


# --------------------------------------------------------------------------
# conjugates
# --------------------------------------------------------------------------

def conjugate_f(v, w, restrict_simplex: bool = False) -> ExtReal:
    """``-sum_i v_i log(w_i / v_i)`` with ``0 log(.) = 0``.

    The conjugate of ``r -> log(exp(r).w)`` equals this expression on the
    simplex and ``+inf`` elsewhere; pass ``restrict_simplex=True`` to get
    that exact conjugate.
    """
    v = np.asarray(v, dtype=float).ravel()
    w = np.asarray(w, dtype=float).ravel()
    if v.shape != w.shape:
        raise DimensionMismatch("v and w differ in length")
    if np.any(v < 0):
        return Unbounded.ABOVE
    if restrict_simplex and abs(v.sum() - 1.0) > 1e-9:
        return Unbounded.ABOVE
    pos = v > 0
    if np.any(pos & (w <= 0)):
        return Unbounded.ABOVE
    return float(np.sum(v[pos] * np.log(v[pos] / w[pos])))


def conjugate_h(z, rhat, ball: BallSpec) -> float:
    """Conjugate of ``r -> |r - rhat|^p``: ``rhat.z + |z|_*^q / (q p^(q-1))``."""
    if ball.p == 1.0:
        raise UnsupportedOrder("for p = 1 the conjugate is an indicator")
    z = np.asarray(z, dtype=float).ravel()
    rhat = np.asarray(rhat, dtype=float).ravel()
    q = ball.q
    return float(rhat @ z + ball.dual_norm(z) ** q / (q * ball.p ** (q - 1.0)))


def conjugate_inner_value(w, lam: float, rhat, ball: BallSpec,
                          cfg: InnerEvalConfig | None = None) -> ExtReal:
    """Maximize ``sum v log(w/v) + rhat.v - lam h(v/lam)`` over the simplex in ``v``.

    For p = 1 the penalty is replaced by the constraint ``|v|_* <= lam``.
    Solved numerically in softmax coordinates.
    """
    cfg = cfg or InnerEvalConfig()
    w = _weights(w)
    rhat = np.asarray(rhat, dtype=float).ravel()
    if not lam > 0:
        raise ValidationError("lambda must be > 0")
    S = np.flatnonzero(w > 0)
    k = S.size
    logw = np.log(w[S])
    r = rhat[S]
    if math.isinf(lam):
        return _log_payoff(r, logw)
    p, dual = ball.p, ball.dual_norm
    if p == 1.0:
        floor = 1.0 / _min_norm_on_support(ball.norm, k)
        if lam < floor * (1 - 1e-12):
            return Unbounded.BELOW
        if lam <= floor * (1 + 1e-12):
            v = np.full(k, 1.0 / k)
            return float(v @ (r + logw - np.log(v)))
    coef = 0.0 if p == 1.0 else lam ** (1.0 - ball.q) / (ball.q * p ** (ball.q - 1.0))
    q = ball.q
    if k == 1:
        return float(r[0] + logw[0]) - coef

    def soft(theta):
        th = np.append(0.0, theta)
        L = _lse(th)
        return np.exp(th - L)

    def chain(v, dv):
        # gradient of a function of v pulled back to theta (first coordinate fixed)
        return (v * (dv - v @ dv))[1:]

    def base(v):
        val = float(v @ (r + logw - np.log(v)))
        return val, r + logw - np.log(v) - 1.0

    smooth_pen = p > 1.0 and dual is not Norm.LINF
    if smooth_pen or (p == 1.0 and dual is Norm.L1):
        def neg(theta):
            v = soft(theta)
            val, dv = base(v)
            if p > 1.0:
                nv = dual(v)
                val -= coef * nv ** q
                if dual is Norm.L2:
                    dv = dv - coef * q * nv ** (q - 2.0) * v
                else:
                    dv = dv - coef * q * nv ** (q - 1.0)
            return -val, -chain(v, dv)

        best = -math.inf
        for th0 in (np.zeros(k - 1), (r + logw)[1:] - (r + logw)[0]):
            res = minimize(neg, th0, jac=True, method="BFGS", options={"gtol": 1e-13, "maxiter": 5000})
            best = max(best, -float(res.fun))
        return best

    # constrained forms: p = 1 with l2 / linf dual, or linf dual penalty
    n_th = k - 1
    if dual is Norm.LINF:
        def neg(x):
            v = soft(x[:n_th])
            val, dv = base(v)
            tau = x[n_th] if p > 1.0 else 0.0
            val -= coef * max(tau, 0.0) ** q if p > 1.0 else 0.0
            g = -chain(v, dv)
            gt = coef * q * max(tau, 0.0) ** (q - 1.0) if p > 1.0 else 0.0
            return -val, np.append(g, gt)

        def cons(x):
            v = soft(x[:n_th])
            cap = x[n_th] if p > 1.0 else lam
            return cap - v

        def cons_jac(x):
            v = soft(x[:n_th])
            J = np.diag(v) - np.outer(v, v)
            out = np.zeros((k, n_th + 1))
            out[:, :n_th] = -J[:, 1:]
            if p > 1.0:
                out[:, n_th] = 1.0
            return out
    else:  # p == 1, l2 dual
        def neg(x):
            v = soft(x[:n_th])
            val, dv = base(v)
            return -val, np.append(-chain(v, dv), 0.0)

        def cons(x):
            v = soft(x[:n_th])
            return np.array([lam * lam - v @ v])

        def cons_jac(x):
            v = soft(x[:n_th])
            return np.append(-chain(v, 2.0 * v), 0.0)[None, :]

    best = -math.inf
    for th0 in (np.zeros(n_th), (r + logw)[1:] - (r + logw)[0]):
        v0 = soft(th0)
        x0 = np.append(th0, float(v0.max()))
        res = minimize(neg, x0, jac=True, method="SLSQP",
                       constraints=[{"type": "ineq", "fun": cons, "jac": cons_jac}],
                       options={"ftol": 1e-15, "maxiter": 2000})
        if np.all(cons(res.x) >= -1e-9):
            best = max(best, -float(res.fun))
    if not math.isfinite(best):
        raise NumericFailure("conjugate maximization failed")
    return best


# --------------------------------------------------------------------------
# worst-case objective
# --------------------------------------------------------------------------

def _dual_function(w, samples, ball, cfg):
    R = samples.values

    def h(log_lam):
        lam = math.exp(log_lam)
        tot = 0.0
        for j in range(R.shape[0]):
            v = inner_min_value(w, lam, R[j], ball, cfg)
            if isinstance(v, Unbounded):
                return -math.inf
            tot += v
        return tot / R.shape[0] - lam * ball.epsilon ** ball.p
    return h


def _golden_max(h, a, b, tol):
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = h(c), h(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = h(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = h(d)
    x = 0.5 * (a + b)
    return x, h(x)


def robust_objective(w, samples: ReturnsMatrix, ball: BallSpec,
                     cfg: InnerEvalConfig | None = None, return_lambda: bool = False):
    """Worst-case expected log growth of ``w`` over the Wasserstein ball.

    Maximizes the dual function over ``log(lambda)`` by golden-section
    search; each evaluation runs one inner minimization per sample.
    """
    cfg = cfg or InnerEvalConfig()
    if samples.kind is not ReturnKind.LOG:
        raise ValidationError("samples must be log-returns")
    w = _weights(w)
    if w.size != samples.n_assets:
        raise DimensionMismatch("weights and samples differ in dimension")
    if ball.epsilon == 0.0:
        logw = np.log(np.where(w > 0, w, 1.0))
        val = float(np.mean(logsumexp(samples.values + np.where(w > 0, logw, -np.inf), axis=1)))
        return (val, math.inf) if return_lambda else val
    h = _dual_function(w, samples, ball, cfg)
    lo, hi = (math.log(x) for x in cfg.lambda_bracket)
    tol = 1e-9
    for expansion in range(cfg.max_expansions + 1):
        x, val = _golden_max(h, lo, hi, tol)
        at_lo = x - lo < 1e-6
        at_hi = hi - x < 1e-6
        if not (at_lo or at_hi):
            break
        if expansion == cfg.max_expansions:
            raise BracketTooNarrow(
                f"maximizing lambda {math.exp(x):.3g} at bracket edge after "
                f"{cfg.max_expansions} expansions")
        # double the log-span on the offending side
        if at_lo:
            lo = lo - abs(lo) if lo != 0 else -1.0
        if at_hi:
            hi = hi + abs(hi) if hi != 0 else 1.0
    if not math.isfinite(val):
        raise NumericFailure("worst-case objective is unbounded below on the bracket")
    return (val, math.exp(x)) if return_lambda else val


def duality_suite(seed: int, instances: int = 100, cfg: InnerEvalConfig | None = None):
    """Random p = 2 / l2 instances comparing the primal and conjugate routes.

    Returns a list of ``(n, N, lam, max_abs_gap)`` per instance.
    """
    rng = np.random.default_rng(seed)
    ball = BallSpec(2.0, 0.0, Norm.L2)
    out = []
    for _ in range(instances):
        n = int(rng.integers(1, 4))
        N = int(rng.integers(1, 6))
        w = rng.dirichlet(np.ones(n))
        lam = float(rng.uniform(0.1, 10.0))
        R = rng.normal(0.0, 0.05, size=(N, n))
        gap = 0.0
        for j in range(N):
            a = ext_to_float(inner_min_value(w, lam, R[j], ball, cfg))
            b = ext_to_float(conjugate_inner_value(w, lam, R[j], ball, cfg))
            gap = max(gap, abs(a - b))
        out.append((n, N, lam, gap))
    return out
