"""Per-sample value functions of the robust growth program at fixed (w, lambda).

For each sample ``j`` the inner maximization over ``v_j`` on the simplex

    psi_j(w, lam) = max_v  r_j.v + sum_i v_i log(w_i / v_i) - pen(v, lam)

is solved exactly (to machine precision) by a case-specific routine.  The
per-sample maximizers give the gradient in ``w`` through the envelope
theorem, ``d psi_j / d w_i = v_ji / w_i``.  Averaging over samples and
subtracting ``lam * eps^p`` gives the reduced concave objective
``F(w, lam)`` maximized by :mod:`wkelly.robust`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq
from scipy.special import logsumexp

from .domain import BallSpec, Norm
from .errors import UnsupportedOrder
from .kernels import solve_quad_entropy


@dataclass
class Evaluation:
    value: float
    grad: np.ndarray | None = None
    hess: np.ndarray | None = None
    V: np.ndarray | None = None
    extra: dict | None = None


def entropy_sum(V: np.ndarray, A: np.ndarray) -> np.ndarray:
    """Row sums of ``v (a - log v)`` with ``0 log 0 = 0``."""
    pos = V > 0
    safe = np.where(pos, V, 1.0)
    return np.where(pos, V * (np.where(pos, A, 0.0) - np.log(safe)), 0.0).sum(axis=1)


def softmax_rows(A: np.ndarray):
    L = logsumexp(A, axis=1)
    return np.exp(A - L[:, None]), L


def capped_softmax(a: np.ndarray, tau: float):
    """Maximizer of ``sum v (a - log v)`` on the simplex with ``v <= tau``.

    Returns ``(v, s, capped)`` where free coordinates satisfy
    ``v_i = exp(a_i + s)`` and capped ones ``v_i = tau``.
    """
    fin = np.isfinite(a)
    k = int(fin.sum())
    v = np.zeros_like(a)
    capped = np.zeros(a.shape, dtype=bool)
    idx = np.flatnonzero(fin)
    if tau * k <= 1.0 + 1e-15:
        v[idx] = 1.0 / k
        capped[idx] = True
        return v, -math.inf, capped
    order = idx[np.argsort(-a[idx], kind="stable")]
    srt = a[order]
    # suffix log-sum-exp: tail[m] = lse(srt[m:])
    tail = np.logaddexp.accumulate(srt[::-1])[::-1]
    counts = np.arange(k)
    rest = 1.0 - counts * tau
    with np.errstate(divide="ignore", invalid="ignore"):
        svals = np.log(rest) - tail
    ok = (rest > 0) & (srt + svals <= math.log(tau))
    m = int(np.argmax(ok)) if ok.any() else k - 1
    s = float(svals[m])
    v[order[:m]] = tau
    capped[order[:m]] = True
    v[order[m:]] = np.exp(srt[m:] + s)
    return v, s, capped


class RobustModel:
    """Reduced objective ``F(w, lam)`` for a given sample matrix and ball."""

    def __init__(self, R: np.ndarray, ball: BallSpec):
        self.R = np.asarray(R, dtype=float)
        self.N, self.n = self.R.shape
        self.ball = ball
        self.p = ball.p
        self.eps_p = ball.epsilon ** ball.p
        dual = ball.dual_norm
        if ball.p == 1.0:
            self.case = {Norm.L2: "p1_l2", Norm.LINF: "capped", Norm.L1: "free"}[dual]
        elif dual is Norm.L1:
            self.case = "free"
        elif dual is Norm.LINF:
            self.case = "capped"
        elif ball.p == 2.0:
            self.case = "quad"
        else:
            raise UnsupportedOrder(f"solver supports p in {{1, 2}} for the l2 norm, got p={ball.p}")
        self.q = ball.q
        self.c = ball.power_coefficient

    @property
    def analytic_hessian(self) -> bool:
        return True

    def lambda_lower_bound(self, k: int | None = None) -> float:
        """Smallest admissible multiplier for full support ``k`` (0 for p > 1)."""
        if self.p > 1.0:
            return 0.0
        k = self.n if k is None else k
        dual = self.ball.dual_norm
        if dual is Norm.L2:
            return 1.0 / math.sqrt(k)
        if dual is Norm.LINF:
            return 1.0 / k
        return 1.0

    def evaluate(self, w: np.ndarray, lam: float, order: int = 1) -> Evaluation:
        w = np.asarray(w, dtype=float)
        if np.any(w < 0) or not lam > 0 or not math.isfinite(lam):
            return Evaluation(-math.inf)
        with np.errstate(divide="ignore"):
            logw = np.log(w)
        A = self.R + logw[None, :]
        return getattr(self, "_eval_" + self.case)(w, lam, A, order)

    # -- p = 2, l2 ----------------------------------------------------------
    def _eval_quad(self, w, lam, A, order):
        beta = 1.0 / (2.0 * lam)
        V, S = solve_quad_entropy(A, beta)
        sq = np.einsum("ij,ij->i", V, V)
        psi = entropy_sum(V, A) - 0.5 * beta * sq
        F = psi.mean() - lam * self.eps_p
        if order == 0:
            return Evaluation(F, V=V)
        Q = np.exp(self.R + S[:, None] - beta * V)
        gw = Q.mean(axis=0)
        glam = beta * beta * sq.mean() - self.eps_p
        grad = np.append(gw, glam)
        H = None
        if order >= 2:
            H = self._quad_hessian(V, Q, beta)
        return Evaluation(F, grad, H, V, {"beta": beta})

    def _quad_hessian(self, V, Q, beta):
        N, n = V.shape
        den = 1.0 + beta * V
        D = V / den
        SD = D.sum(axis=1)
        DW = Q / den  # D_i / w_i
        H = np.zeros((n + 1, n + 1))
        diag = -(beta * Q * Q / den).sum(axis=0)
        H[:n, :n] = np.diag(diag) - (DW.T / SD) @ DW
        m = (D * V).sum(axis=1) / SD
        cross = 2.0 * beta * beta * DW * (V - m[:, None])
        H[:n, n] = H[n, :n] = cross.sum(axis=0)
        sq = (V * V).sum(axis=1)
        vdv = m * (D * V).sum(axis=1) - (D * V * V).sum(axis=1)
        H[n, n] = (-2.0 * beta * beta * (2.0 * beta * sq + 2.0 * beta * beta * vdv)).sum()
        return H / N

    # -- dual norm l1: the penalty is constant on the simplex -----------------
    def _eval_free(self, w, lam, A, order):
        V, L = softmax_rows(A)
        if self.p == 1.0:
            if lam < 1.0:
                return Evaluation(-math.inf)
            pen, dpen, ddpen = 0.0, 0.0, 0.0
        else:
            q, c = self.q, self.c
            pen = c * lam ** (1.0 - q)
            dpen = -c * (q - 1.0) * lam ** (-q)
            ddpen = c * q * (q - 1.0) * lam ** (-q - 1.0)
        F = L.mean() - pen - lam * self.eps_p
        if order == 0:
            return Evaluation(F, V=V)
        with np.errstate(divide="ignore", invalid="ignore"):
            Q = np.exp(self.R - L[:, None])
        grad = np.append(Q.mean(axis=0), -dpen - self.eps_p)
        H = None
        if order >= 2:
            n = self.n
            H = np.zeros((n + 1, n + 1))
            H[:n, :n] = -(Q.T @ Q) / self.N
            H[n, n] = -ddpen
        return Evaluation(F, grad, H, V)

    # -- p = 1, l2: per-row multiplier on |v|_2 <= lam ------------------------
    def _eval_p1_l2(self, w, lam, A, order):
        fin = np.isfinite(A)
        k = fin.sum(axis=1)
        if np.any(lam * lam * k < 1.0 - 1e-14):
            return Evaluation(-math.inf)
        V, S, beta = self._p1_l2_rows(A, lam)
        F = entropy_sum(V, A).mean() - lam * self.eps_p
        if order == 0:
            return Evaluation(F, V=V)
        Q = np.exp(self.R + S[:, None] - beta[:, None] * V)
        grad = np.append(Q.mean(axis=0), (beta * lam).mean() - self.eps_p)
        H = self._p1_l2_hessian(V, Q, beta, lam) if order >= 2 else None
        return Evaluation(F, grad, H, V, {"beta": beta})

    def _p1_l2_hessian(self, V, Q, beta, lam):
        # psi = min_beta [quad kernel value + beta lam^2 / 2]; the quad-kernel
        # curvature is corrected by the sensitivity of the active multiplier
        N, n = V.shape
        b = beta[:, None]
        den = 1.0 + b * V
        D = V / den
        SD = D.sum(axis=1)
        DW = Q / den
        H = np.zeros((n + 1, n + 1))
        H[:n, :n] = np.diag(-(b * Q * Q / den).sum(axis=0)) - (DW.T / SD) @ DW
        act = beta > 0
        if np.any(act):
            m = (D * V).sum(axis=1) / SD
            GW = DW * (m[:, None] - V)
            gbb = (D * V * (V - m[:, None])).sum(axis=1)
            act &= gbb > 1e-300
            GW, gbb, ba = GW[act], gbb[act], beta[act]
            H[:n, :n] -= (GW.T / gbb) @ GW
            H[:n, n] = H[n, :n] = -(lam * GW / gbb[:, None]).sum(axis=0)
            H[n, n] = (ba - lam * lam / gbb).sum()
        return H / N

    def _p1_l2_rows(self, A, lam):
        N = A.shape[0]
        V, S = solve_quad_entropy(A, 0.0)
        beta = np.zeros(N)
        target = lam * lam
        act = np.flatnonzero(np.einsum("ij,ij->i", V, V) > target)
        if act.size == 0:
            return V, S, beta
        Aa = A[act]
        lo = np.full(act.size, -40.0)
        hi = np.full(act.size, 60.0)
        u = np.zeros(act.size)
        for _ in range(200):
            b = np.exp(u)
            Va, Sa = solve_quad_entropy(Aa, b)
            h = np.einsum("ij,ij->i", Va, Va) - target
            D = Va / (1.0 + b[:, None] * Va)
            SD = D.sum(axis=1)
            m = (D * Va).sum(axis=1) / SD
            dh = 2.0 * b * (Va * D * (m[:, None] - Va)).sum(axis=1)
            lo = np.where(h > 0, u, lo)
            hi = np.where(h <= 0, u, hi)
            if np.all(np.abs(h) <= 1e-15 * target) or np.all(hi - lo < 1e-13):
                break
            with np.errstate(divide="ignore", invalid="ignore"):
                un = u - h / dh
            bad = ~((un > lo) & (un < hi))
            u = np.where(bad, 0.5 * (lo + hi), un)
        # land on the feasible side of the norm constraint
        b = np.exp(hi)
        Va, Sa = solve_quad_entropy(Aa, b)
        V[act] = Va
        S[act] = Sa
        beta[act] = b
        return V, S, beta

    # -- dual norm linf: capped simplex --------------------------------------
    def _capped_tau(self, a, k, tmax, lam):
        """Optimal cap for p > 1: root of the slope in ``tau`` on ``[1/k, tmax]``.

        With coordinates sorted, the cap set is the top ``m`` entries on the
        segment between consecutive breakpoints, and the slope is smooth and
        decreasing there; locate the segment, then run Newton inside it.
        """
        q = self.q
        coef = self.c * lam ** (1.0 - q)
        srt = np.sort(a[np.isfinite(a)])[::-1]
        if tmax <= (1.0 / k) * (1 + 1e-15):
            return tmax
        tail = np.logaddexp.accumulate(srt[::-1])[::-1]
        e = np.exp(srt - tail)
        counts = np.arange(k)
        brk = e / (1.0 + counts * e)  # tau at which entry m reaches the cap
        brk[0] = tmax
        brk[-1] = 1.0 / k
        head = np.concatenate(([0.0], np.cumsum(srt)[:-1]))

        def slope(tau, m):
            rest = 1.0 - m * tau
            g = head[m] + m * (math.log(rest) - tail[m]) - m * math.log(tau) if m else 0.0
            return g - coef * q * tau ** (q - 1.0)

        gb = np.array([slope(brk[m], m) for m in range(k)])
        if gb[-1] <= 0:
            return 1.0 / k
        m = int(np.argmax(gb > 0))
        lo, hi = brk[m], brk[m - 1]
        tau = 0.5 * (lo + hi)
        for _ in range(100):
            g = slope(tau, m)
            if g > 0:
                lo = tau
            else:
                hi = tau
            h = (-m * m / (1.0 - m * tau) - m / tau
                 - coef * q * (q - 1.0) * tau ** (q - 2.0))
            nt = tau - g / h
            if not (lo < nt < hi):
                nt = 0.5 * (lo + hi)
            if abs(nt - tau) <= 4e-16 * tau or hi - lo <= 4e-16 * hi:
                return nt
            tau = nt
        return tau

    def _eval_capped(self, w, lam, A, order):
        N, n = A.shape
        V = np.zeros((N, n))
        Q = np.zeros((N, n))
        psi = np.zeros(N)
        dlam = np.zeros(N)
        H = np.zeros((n + 1, n + 1)) if order >= 2 else None
        with np.errstate(divide="ignore"):
            winv = np.where(w > 0, 1.0 / w, 0.0)
        V0, L0 = softmax_rows(A)
        K = np.isfinite(A).sum(axis=1)
        for j in range(N):
            a = A[j]
            k = int(K[j])
            v0 = V0[j]
            tmax = float(v0.max())
            tau_is_lam = False
            if self.p == 1.0:
                if lam * k < 1.0 - 1e-14:
                    return Evaluation(-math.inf)
                if lam >= tmax:
                    v, s, cap, tau = v0, -float(L0[j]), np.zeros(n, bool), tmax
                    mult = 0.0
                else:
                    tau = lam
                    tau_is_lam = True
                    v, s, cap = capped_softmax(a, tau)
                    mult = _capped_slope(a, s, cap, tau)
                pen = 0.0
                dlam[j] = mult
            else:
                q, c = self.q, self.c
                tau = self._capped_tau(a, k, tmax, lam)
                v, s, cap = capped_softmax(a, tau)
                pen = c * lam ** (1.0 - q) * tau ** q
                dlam[j] = c * (q - 1.0) * lam ** (-q) * tau ** q
            V[j] = v
            psi[j] = entropy_sum(v[None, :], a[None, :])[0] - pen
            with np.errstate(divide="ignore", invalid="ignore"):
                Q[j] = np.where(cap, v / w, np.exp(self.R[j] + s) if math.isfinite(s) else 0.0)
            if H is not None:
                self._capped_row_hessian(H, v, cap, Q[j], winv, tau, lam, tau_is_lam)
        F = psi.mean() - lam * self.eps_p
        if order == 0:
            return Evaluation(F, V=V)
        grad = np.append(Q.mean(axis=0), dlam.mean() - self.eps_p)
        if H is not None:
            H /= N
        return Evaluation(F, grad, H, V)

    def _capped_row_hessian(self, H, v, cap, qrow, winv, tau, lam, tau_is_lam):
        """Accumulate one row's curvature in ``(w, lam)`` for a fixed cap set."""
        n = v.size
        free = (~cap) & (v > 0)
        m = int(cap.sum())
        # curvature in a = r + log w at fixed tau
        Haa = np.zeros((n, n))
        Hat = np.zeros(n)
        Htt = 0.0
        Htl = 0.0
        Hll = 0.0
        if free.any():
            vf = v[free]
            rest = vf.sum()
            Haa[np.ix_(free, free)] = np.diag(vf) - np.outer(vf, vf) / rest
            Hat[free] = -m * vf / rest
        Hat[cap] = 1.0
        uniform = m > 0 and not free.any()
        if not uniform and m > 0:
            Htt = -m / tau - m * m / (1.0 - m * tau)
        if self.p == 1.0:
            if tau_is_lam:
                Hal = Hat
                Hll = Htt
            else:
                Hal = np.zeros(n)
            Haa_eff = Haa
        else:
            q, c = self.q, self.c
            Htt -= c * lam ** (1.0 - q) * q * (q - 1.0) * tau ** (q - 2.0)
            Htl = -c * (1.0 - q) * lam ** (-q) * q * tau ** (q - 1.0)
            Hll = -c * q * (q - 1.0) * lam ** (-q - 1.0) * tau ** q
            if uniform:
                # cap pinned at 1/k: tau does not move
                Haa_eff, Hal = Haa, np.zeros(n)
            else:
                Haa_eff = Haa - np.outer(Hat, Hat) / Htt
                Hal = -Hat * Htl / Htt
                Hll = Hll - Htl * Htl / Htt
        # chain rule through a = r + log w
        H[:n, :n] += winv[:, None] * Haa_eff * winv[None, :] - np.diag(qrow * winv)
        H[:n, n] += Hal * winv
        H[n, :n] += Hal * winv
        H[n, n] += Hll


def _capped_slope(a, s, cap, tau) -> float:
    if not cap.any():
        return 0.0
    if not math.isfinite(s):
        return math.inf
    return float((a[cap] + s - math.log(tau)).sum())


class KellyModel:
    """Sample-average log growth ``(1/N) sum_j log(exp(r_j) . w)``."""

    def __init__(self, R: np.ndarray):
        self.R = np.asarray(R, dtype=float)
        self.N, self.n = self.R.shape
        # scale rows for overflow safety; the shift is added back to values
        self.shift = self.R.max(axis=1)
        self.X = np.exp(self.R - self.shift[:, None])

    def evaluate(self, w: np.ndarray, order: int = 1) -> Evaluation:
        w = np.asarray(w, dtype=float)
        if np.any(w < 0):
            return Evaluation(-math.inf)
        pw = self.X @ w
        if np.any(pw <= 0):
            return Evaluation(-math.inf)
        F = float(np.mean(np.log(pw) + self.shift))
        if order == 0:
            return Evaluation(F)
        Q = self.X / pw[:, None]
        grad = Q.mean(axis=0)
        H = -(Q.T @ Q) / self.N if order >= 2 else None
        return Evaluation(F, grad, H, Q * w[None, :])
