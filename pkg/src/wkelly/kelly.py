"""Sample-average (empirical) Kelly portfolio."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _barrier
from ._model import KellyModel
from .domain import (ReturnKind, ReturnsMatrix, SimplexWeights, SolverSettings, Status,
                     make_weights)
from .errors import DimensionMismatch, SolverFailure, ValidationError


@dataclass(frozen=True)
class KellySolution:
    weights: SimplexWeights
    objective: float
    status: Status
    fw_gap: float = 0.0
    iterations: int = 0
    info: dict = field(default_factory=dict, compare=False)


def _check_log(samples: ReturnsMatrix):
    if samples.kind is not ReturnKind.LOG:
        raise ValidationError("samples must be log-returns")


def kelly_objective(w, samples: ReturnsMatrix) -> float:
    """Mean log absolute portfolio return ``(1/N) sum_j log(exp(r_j) . w)``."""
    _check_log(samples)
    w = np.asarray(w, dtype=float)
    if w.shape != (samples.n_assets,):
        raise DimensionMismatch(f"{w.shape[0] if w.ndim else 0} weights for {samples.n_assets} assets")
    return KellyModel(samples.values).evaluate(w, order=0).value


def kelly_gradient(w, samples: ReturnsMatrix) -> np.ndarray:
    """``(1/N) sum_j exp(r_j) / (exp(r_j) . w)``."""
    _check_log(samples)
    return KellyModel(samples.values).evaluate(np.asarray(w, dtype=float), order=1).grad


def simplex_fw_gap(w: np.ndarray, grad: np.ndarray) -> float:
    """Largest first-order improvement over the simplex, ``max_i g_i - g.w``.

    For a concave objective this bounds the distance to the optimum value.
    """
    return float(np.max(grad) - grad @ w)


def solve_kelly(samples: ReturnsMatrix, settings: SolverSettings | None = None) -> KellySolution:
    """Maximize the sample-average log growth over the simplex.

    Uses a log-barrier Newton method with the exact Hessian; optimality is
    certified by the simplex first-order gap.
    """
    settings = settings or SolverSettings()
    _check_log(samples)
    n = samples.n_assets
    model = KellyModel(samples.values)
    if n == 1:
        w = make_weights([1.0])
        return KellySolution(w, model.evaluate(w.w, 0).value, Status.OPTIMAL)

    def fun(z, order):
        e = model.evaluate(z, order)
        return e.value, e.grad, e.hess

    f0 = abs(model.evaluate(np.full(n, 1.0 / n), 0).value)
    target = 1e-2 * settings.tol_rel * (1.0 + f0)
    res = _barrier.maximize(fun, np.full(n, 1.0 / n), n, np.zeros(n), target,
                            max_iter=settings.max_iter)
    w = np.maximum(res.z, 0.0)
    w = make_weights(w / w.sum())
    ev = model.evaluate(w.w, 1)
    gap = simplex_fw_gap(w.w, ev.grad)
    ok = res.converged and gap <= settings.tol_rel * (1.0 + abs(ev.value))
    sol = KellySolution(w, ev.value, Status.OPTIMAL if ok else Status.MAX_ITER, gap,
                        res.iterations, {"barrier_gap": res.gap_bound})
    if not ok:
        raise SolverFailure(f"Kelly solve stopped after {res.iterations} iterations "
                            f"(first-order gap {gap:.3g})", sol)
    return sol
