"""Constant-proportions backtests and performance metrics."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .domain import ReturnKind, ReturnsMatrix, SimplexWeights
from .errors import DimensionMismatch, LengthMismatch, Ruin, ValidationError


@dataclass(frozen=True)
class Trajectory:
    """Portfolio values ``V_0 = 1, ..., V_T`` and the per-period simple returns."""

    values: np.ndarray
    period_returns: np.ndarray

    def __post_init__(self):
        for name in ("values", "period_returns"):
            a = np.array(getattr(self, name), dtype=float)
            a.setflags(write=False)
            object.__setattr__(self, name, a)
        if self.values.shape != (self.period_returns.size + 1,):
            raise ValidationError("values must have one more entry than period_returns")

    @property
    def n_periods(self) -> int:
        return self.period_returns.size


def run_constant_mix(w, returns: ReturnsMatrix) -> Trajectory:
    """Rebalance to ``w`` every period; ``V_t = prod_{s<=t} (1 + R_s . w)``.

    Raises :class:`Ruin` at the first period whose gross return is not positive.
    """
    if returns.kind is not ReturnKind.SIMPLE:
        raise ValidationError("backtests take simple returns")
    w = w.w if isinstance(w, SimplexWeights) else np.asarray(w, dtype=float)
    if w.shape != (returns.n_assets,):
        raise DimensionMismatch(f"{w.size} weights for {returns.n_assets} assets")
    port = returns.values @ w
    gross = 1.0 + port
    bad = np.flatnonzero(gross <= 0)
    if bad.size:
        t = int(bad[0])
        raise Ruin(t + 1, float(gross[t]))
    values = np.concatenate(([1.0], np.cumprod(gross)))
    return Trajectory(values, port)


@dataclass(frozen=True)
class MetricsReport:
    annualized_return: float
    annualized_volatility: float
    sharpe_ratio: float
    max_drawdown: float
    log_final_value: float
    growth_rate: float
    zero_volatility: bool = False

    def as_dict(self) -> dict:
        return {
            "annualized_return": self.annualized_return,
            "annualized_volatility": self.annualized_volatility,
            "sharpe_ratio": self.sharpe_ratio,
            "max_drawdown": self.max_drawdown,
            "log_final_value": self.log_final_value,
            "growth_rate": self.growth_rate,
        }


METRIC_NAMES = ("annualized_return", "annualized_volatility", "sharpe_ratio",
                "max_drawdown", "log_final_value", "growth_rate")


def max_drawdown(values) -> float:
    v = np.asarray(values, dtype=float)
    peaks = np.maximum.accumulate(v)
    return float(np.max((peaks - v) / peaks))


def performance_metrics(tr: Trajectory, periods_per_year: int = 252) -> MetricsReport:
    """Annualized return and volatility, Sharpe (zero risk-free rate), drawdown, log growth.

    Volatility uses the sample standard deviation (one degree of freedom
    removed); a single-period path has zero volatility.
    """
    T = tr.n_periods
    if T < 1:
        raise ValidationError("need at least one period")
    if periods_per_year < 1:
        raise ValidationError("periods_per_year must be >= 1")
    # sum of logs rather than log of the product: exact growth-rate identity
    log_final = float(np.sum(np.log1p(tr.period_returns)))
    growth = log_final / T
    ann_ret = math.expm1(growth * periods_per_year)
    vol = float(np.std(tr.period_returns, ddof=1)) * math.sqrt(periods_per_year) if T > 1 else 0.0
    zero_vol = vol == 0.0
    if zero_vol:
        sharpe = math.inf if ann_ret > 0 else (-math.inf if ann_ret < 0 else 0.0)
    else:
        sharpe = ann_ret / vol
    return MetricsReport(ann_ret, vol, sharpe, max_drawdown(tr.values), log_final, growth, zero_vol)


@dataclass(frozen=True)
class BandSummary:
    """Per-step mean and (population) standard deviation of trajectory values."""

    mean: np.ndarray
    std: np.ndarray

    def rows(self):
        return [(t, float(m), float(s)) for t, (m, s) in enumerate(zip(self.mean, self.std))]


def aggregate_trajectories(trs: Sequence[Trajectory]) -> BandSummary:
    trs = list(trs)
    if not trs:
        raise ValidationError("no trajectories to aggregate")
    lengths = {t.values.size for t in trs}
    if len(lengths) != 1:
        raise LengthMismatch(f"trajectory lengths differ: {sorted(lengths)}")
    V = np.vstack([t.values for t in trs])
    return BandSummary(V.mean(axis=0), V.std(axis=0))
