"""Wasserstein-robust growth-optimal portfolio.

The robust problem over a Wasserstein ball of log-return distributions is
solved through its finite convex reformulation in ``(w, v_1..v_N, lam)``:

    max  (1/N) sum_j [ r_j.v_j - c lam |v_j / lam|_*^q + sum_i v_ji log(w_i / v_ji) ]
         - lam eps^p

with ``c = (p-1) p^(-q)`` and ``q = p/(p-1)``.  Each ``v_j`` ranges over the
probability simplex: the entropy term is the conjugate of the log payoff,
which is finite only there.  For ``p = 1`` the power term is replaced by the
constraints ``|v_j|_* <= lam``.

Solution strategy: the ``v_j`` blocks are eliminated exactly for fixed
``(w, lam)`` by the per-sample kernels, and the remaining concave problem in
``(w, lam)`` is solved with a log-barrier Newton method.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _barrier
from ._model import RobustModel, softmax_rows
from .domain import (BallSpec, ExtReal, Norm, ReturnKind, ReturnsMatrix, RobustSolution,
                     SolverSettings, Status, Unbounded, ext_to_float, make_weights)
from .errors import SolverFailure, UnsupportedOrder, ValidationError
from .kelly import simplex_fw_gap, solve_kelly


# --------------------------------------------------------------------------
# objective terms with their boundary conventions
# --------------------------------------------------------------------------

def entropy_term(v, w) -> ExtReal:
    """``sum_i v_i log(w_i / v_i)``; ``v_i = 0`` contributes 0, ``v_i > 0 = w_i`` gives -inf."""
    v = np.asarray(v, dtype=float)
    w = np.asarray(w, dtype=float)
    pos = v > 0
    if np.any(pos & (w <= 0)):
        return Unbounded.BELOW
    return float(np.sum(v[pos] * np.log(w[pos] / v[pos])))


def perspective_term(v, lam: float, ball: BallSpec) -> ExtReal:
    """``c lam |v/lam|_*^q`` for p > 1, extended to ``lam = 0`` by its closure.

    At ``lam = 0`` the term is 0 when ``v = 0`` and ``+inf`` otherwise; at
    ``lam = inf`` it vanishes.
    """
    if ball.p == 1.0:
        raise UnsupportedOrder("p = 1 uses norm constraints instead of a power term")
    nv = ball.dual_norm(v)
    if lam == 0.0:
        return 0.0 if nv == 0.0 else Unbounded.ABOVE
    if math.isinf(lam):
        return 0.0
    return ball.power_coefficient * lam * (nv / lam) ** ball.q


@dataclass(frozen=True)
class ProgramSpec:
    """Variables, objective terms and constraints of the robust program."""

    samples: ReturnsMatrix
    ball: BallSpec
    variable_layout: dict
    objective_terms: tuple
    constraints: tuple
    perspective_coefficient: float | None

    @property
    def n_norm_constraints(self) -> int:
        return sum(1 for c in self.constraints if c.startswith("lambda >= |v_"))

    def describe_power_term(self) -> str | None:
        if self.perspective_coefficient is None:
            return None
        c = self.perspective_coefficient
        if self.ball.p == 2.0:
            return f"|v_j|_*^2 / ({1.0 / c:g} lambda)"
        return f"{c:.6g} lambda |v_j / lambda|_*^{self.ball.q:.6g}"

    def objective(self, w, V, lam: float, tol: float = 1e-8) -> ExtReal:
        """Program objective at a candidate; ``-inf`` when the candidate is infeasible."""
        R = self.samples.values
        w = np.asarray(w, dtype=float)
        V = np.asarray(V, dtype=float)
        if V.shape != R.shape or w.shape != (R.shape[1],):
            raise ValidationError("candidate dimensions do not match the program")
        if (np.any(w < -tol) or abs(w.sum() - 1.0) > tol or np.any(V < -tol)
                or np.any(np.abs(V.sum(axis=1) - 1.0) > tol) or not lam >= 0):
            return Unbounded.BELOW
        w = np.clip(w, 0.0, None)
        V = np.clip(V, 0.0, None)
        eps = self.ball.epsilon
        if math.isinf(lam) and eps > 0:
            return Unbounded.BELOW
        total = 0.0
        for j in range(R.shape[0]):
            ent = entropy_term(V[j], w)
            if isinstance(ent, Unbounded):
                return Unbounded.BELOW
            if self.ball.p == 1.0:
                if self.ball.dual_norm(V[j]) > lam + tol:
                    return Unbounded.BELOW
                pen = 0.0
            else:
                pen = perspective_term(V[j], lam, self.ball)
                if isinstance(pen, Unbounded):
                    return Unbounded.BELOW
            total += float(R[j] @ V[j]) + ent - pen
        radius_cost = 0.0 if math.isinf(lam) else lam * eps ** self.ball.p
        return total / R.shape[0] - radius_cost


def build_program(samples: ReturnsMatrix, ball: BallSpec) -> ProgramSpec:
    if samples.kind is not ReturnKind.LOG:
        raise ValidationError("samples must be log-returns")
    if ball.p < 1.0:
        raise UnsupportedOrder(f"p={ball.p} < 1")
    N, n = samples.n_samples, samples.n_assets
    layout = {"w": n, "v": (N, n), "lambda": 1}
    cons = ["w in simplex", "v_j in simplex for each j", "lambda >= 0"]
    if ball.p == 1.0:
        terms = ("linear v-term", "entropy term", "-lambda eps^p")
        cons += [f"lambda >= |v_{j}|_*" for j in range(N)]
        coef = None
    else:
        terms = ("linear v-term", "entropy term", "perspective-power term", "-lambda eps^p")
        coef = ball.power_coefficient
    return ProgramSpec(samples, ball, layout, terms, tuple(cons), coef)


# --------------------------------------------------------------------------
# solver
# --------------------------------------------------------------------------

def _initial_lambda(model: RobustModel, w: np.ndarray, lb: float) -> float:
    lo = math.log(max(lb * (1.0 + 1e-6), 1e-10) - lb) if lb > 0 else math.log(1e-10)
    hi = math.log(1e10)

    def slope(u):
        return model.evaluate(w, lb + math.exp(u), 1).grad[-1]

    if slope(hi) > 0:
        return lb + math.exp(hi)
    if slope(lo) < 0:
        return lb + math.exp(lo)
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if slope(mid) > 0:
            lo = mid
        else:
            hi = mid
    return lb + math.exp(0.5 * (lo + hi))


def _kelly_as_robust(samples, ball, settings) -> RobustSolution:
    try:
        ks = solve_kelly(samples, settings)
    except SolverFailure as exc:
        ks = exc.solution
    w = ks.weights.w
    with np.errstate(divide="ignore"):
        V, _ = softmax_rows(samples.values + np.log(w)[None, :])
    sol = RobustSolution(ks.weights, math.inf, V, ks.objective, ks.status, ks.fw_gap,
                         ball, ks.iterations, {"route": "kelly"})
    if ks.status is not Status.OPTIMAL:
        raise SolverFailure("zero-radius solve did not converge", sol)
    return sol


def solve_wkelly(samples: ReturnsMatrix, ball: BallSpec,
                 settings: SolverSettings | None = None) -> RobustSolution:
    """Robust log-optimal portfolio over the Wasserstein ball ``ball``.

    Raises :class:`SolverFailure` (carrying the best iterate) when the
    barrier method exhausts ``settings.max_iter`` Newton steps.
    """
    settings = settings or SolverSettings()
    program = build_program(samples, ball)
    if ball.epsilon == 0.0:
        return _kelly_as_robust(samples, ball, settings)
    model = RobustModel(samples.values, ball)
    n = samples.n_assets
    lb = model.lambda_lower_bound()
    w0 = np.full(n, 1.0 / n)
    lam0 = _initial_lambda(model, w0, lb)

    def fun(z, order):
        w = np.maximum(z[:n], settings.floor_w) if order > 0 else z[:n]
        e = model.evaluate(w, z[n], order)
        return e.value, e.grad, e.hess

    f0 = model.evaluate(w0, lam0, 0).value
    target = 1e-2 * settings.tol_rel * (1.0 + abs(f0))
    lower = np.append(np.zeros(n), lb)
    res = _barrier.maximize(fun, np.append(w0, lam0), n, lower, target,
                            max_iter=settings.max_iter,
                            analytic_hessian=model.analytic_hessian)
    w = make_weights(res.z[:n] / res.z[:n].sum())
    lam = float(res.z[n])
    ev = model.evaluate(w.w, lam, 1)
    obj = program.objective(w.w, ev.V, lam, tol=settings.tol_feas)
    if isinstance(obj, Unbounded):
        obj = ev.value
    fw = simplex_fw_gap(w.w, ev.grad[:n])
    status = Status.OPTIMAL if res.converged else Status.MAX_ITER
    sol = RobustSolution(w, lam, ev.V, float(obj), status, float(res.gap_bound), ball,
                         res.iterations, {"route": "barrier", "case": model.case,
                                          "fw_gap": fw, "lambda_slope": float(ev.grad[n])})
    if status is not Status.OPTIMAL:
        raise SolverFailure(f"robust solve stopped after {res.iterations} Newton steps", sol)
    return sol


# --------------------------------------------------------------------------
# certification
# --------------------------------------------------------------------------

@dataclass
class CertificateReport:
    feasibility: dict
    feasible: bool
    oracle_objective: float | None
    consistency_gap: float | None
    fenchel_residuals: np.ndarray | None
    failures: list = field(default_factory=list)

    @property
    def max_fenchel_residual(self) -> float:
        if self.fenchel_residuals is None or self.fenchel_residuals.size == 0:
            return math.nan
        return float(np.max(self.fenchel_residuals))

    @property
    def ok(self) -> bool:
        return not self.failures


def certify_solution(sol: RobustSolution, samples: ReturnsMatrix, ball: BallSpec,
                     cfg=None, tol_feas: float = 1e-8, tol_gap: float = 1e-4) -> CertificateReport:
    """Cross-check a solution against the brute-force oracle.

    Reports feasibility residuals, the gap between the reported objective
    and the oracle's worst-case value at the same weights, and per-sample
    residuals of the conjugate identity at the returned ``v_j``.
    """
    from . import oracle

    failures = []
    if sol.status is not Status.OPTIMAL:
        failures.append(f"status is {sol.status.value}")
    w = np.asarray(sol.weights.w, dtype=float)
    V = np.asarray(sol.v, dtype=float)
    lam = float(sol.lam)
    feas = {
        "weight_sum": abs(float(w.sum()) - 1.0),
        "weight_negativity": max(0.0, -float(w.min())),
        "lambda_negativity": max(0.0, -lam),
        "v_negativity": max(0.0, -float(V.min())) if V.size else 0.0,
        "v_row_sum": float(np.max(np.abs(V.sum(axis=1) - 1.0))) if V.size else 0.0,
    }
    if ball.p == 1.0 and not math.isinf(lam):
        feas["norm_constraint"] = max(0.0, float(np.max(ball.dual_norm.rowwise(V) - lam)))
    feasible = all(v <= tol_feas for v in feas.values())
    if not feasible:
        bad = [k for k, v in feas.items() if v > tol_feas]
        failures.append("feasibility violated: " + ", ".join(bad))

    oracle_obj = gap = None
    try:
        oracle_obj = float(oracle.robust_objective(w, samples, ball, cfg))
        gap = abs(float(sol.objective) - oracle_obj)
        if gap > tol_gap:
            failures.append(f"consistency gap {gap:.3g} exceeds {tol_gap:g}")
    except Exception as exc:  # report carries the failure
        failures.append(f"oracle evaluation failed: {exc}")

    resid = None
    if lam >= 0:
        R = samples.values
        resid = np.empty(R.shape[0])
        for j in range(R.shape[0]):
            primal = ext_to_float(oracle.inner_min_value(w, lam, R[j], ball, cfg))
            ent = entropy_term(V[j], w)
            if ball.p == 1.0 or math.isinf(lam):
                pen = 0.0
            else:
                pen = perspective_term(V[j], lam, ball)
            dual = float(R[j] @ V[j]) + ext_to_float(ent) - ext_to_float(pen)
            resid[j] = abs(primal - dual) if math.isfinite(primal) and math.isfinite(dual) else math.inf
        if resid.size and np.max(resid) > tol_gap:
            failures.append(f"conjugate identity residual {np.max(resid):.3g}")
    return CertificateReport(feas, feasible, oracle_obj, gap, resid, failures)
