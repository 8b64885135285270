"""Diversification sweeps and randomized out-of-sample studies."""
from __future__ import annotations

import csv
import io
import json
import math
import statistics
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .backtest import (METRIC_NAMES, BandSummary, MetricsReport, Trajectory,
                       aggregate_trajectories, performance_metrics, run_constant_mix)
from .data import PriceTable, epsilon_from_delta, log_returns, simple_returns
from .domain import BallSpec, Norm, ReturnsMatrix, SimplexWeights, SolverSettings
from .errors import InsufficientData, SolverFailure, ValidationError, WKellyError
from .kelly import solve_kelly
from .robust import solve_wkelly


# --------------------------------------------------------------------------
# diversification sweep
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class SweepRow:
    delta: float
    epsilon: float
    weights: SimplexWeights | None
    objective: float
    herfindahl: float
    entropy: float
    status: str
    error: str | None = None

    @property
    def failed(self) -> bool:
        return self.weights is None


@dataclass(frozen=True)
class SweepTable:
    rows: tuple
    asset_labels: tuple

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["delta", "epsilon", "objective", "herfindahl", "entropy", "status",
                    *(f"w_{a}" for a in self.asset_labels)])
        for r in self.rows:
            ws = list(r.weights.w) if r.weights is not None else [math.nan] * len(self.asset_labels)
            w.writerow([_fmt(r.delta), _fmt(r.epsilon), _fmt(r.objective), _fmt(r.herfindahl),
                        _fmt(r.entropy), r.status, *(_fmt(x) for x in ws)])
        return buf.getvalue()

    def to_json(self) -> str:
        rows = [{
            "delta": r.delta, "epsilon": r.epsilon, "objective": r.objective,
            "herfindahl": r.herfindahl, "entropy": r.entropy, "status": r.status,
            "error": r.error,
            "weights": None if r.weights is None else dict(zip(self.asset_labels, r.weights.w.tolist())),
        } for r in self.rows]
        return _dumps({"asset_labels": list(self.asset_labels), "rows": rows})


def herfindahl(w) -> float:
    w = np.asarray(w, dtype=float)
    return float(w @ w)


def weight_entropy(w) -> float:
    w = np.asarray(w, dtype=float)
    pos = w > 0
    return float(-np.sum(w[pos] * np.log(w[pos])))


def _fit(train: ReturnsMatrix, delta: float, p: float, norm: Norm, settings: SolverSettings):
    """(weights, epsilon, objective, status) of the Kelly or robust fit for one radius."""
    rule = epsilon_from_delta(train, delta)
    if delta == 0.0:
        ks = solve_kelly(train, settings)
        return ks.weights, 0.0, ks.objective, ks.status.value
    sol = solve_wkelly(train, BallSpec(p, rule.epsilon, norm), settings)
    return sol.weights, rule.epsilon, sol.objective, sol.status.value


def diversification_sweep(samples: ReturnsMatrix, delta_grid: Sequence[float],
                          settings: SolverSettings | None = None, p: float = 2.0,
                          norm: Norm | str = Norm.L2) -> SweepTable:
    """Solve the robust program for each radius scale; rows in ascending ``delta``.

    The ``delta = 0`` row is the sample-average Kelly solution.  A failed
    solve marks its row and the sweep continues.
    """
    settings = settings or SolverSettings()
    norm = Norm.parse(norm)
    grid = sorted(float(d) for d in delta_grid)
    if not grid:
        raise ValidationError("empty delta grid")
    if grid[0] < 0:
        raise ValidationError("delta values must be >= 0")
    rows = []
    for d in grid:
        try:
            w, eps, obj, status = _fit(samples, d, p, norm, settings)
            rows.append(SweepRow(d, eps, w, obj, herfindahl(w.w), weight_entropy(w.w), status))
        except SolverFailure as exc:
            eps = epsilon_from_delta(samples, d).epsilon
            rows.append(SweepRow(d, eps, None, math.nan, math.nan, math.nan, "failed", str(exc)))
    return SweepTable(tuple(rows), samples.asset_labels)


# --------------------------------------------------------------------------
# randomized out-of-sample study
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class StudyConfig:
    """Randomized subset study.

    The training window is ``train_periods`` returns starting at
    ``train_start``; the test window follows it immediately and spans
    ``test_periods`` returns (all remaining when ``None``).
    """

    universe: PriceTable
    subset_size: int = 10
    train_periods: int = 252
    test_periods: int | None = None
    trials: int = 1000
    delta_grid: tuple = (0.0, 0.1, 0.2, 0.3, 0.4)
    seed: int = 0
    train_start: int = 0
    p: float = 2.0
    norm: Norm = Norm.L2
    periods_per_year: int = 252
    threads: int = 1
    settings: SolverSettings = field(default_factory=SolverSettings)

    def __post_init__(self):
        object.__setattr__(self, "delta_grid", tuple(float(d) for d in self.delta_grid))
        object.__setattr__(self, "norm", Norm.parse(self.norm))
        if self.trials < 1:
            raise ValidationError("trials must be >= 1")
        if self.subset_size < 1:
            raise ValidationError("subset_size must be >= 1")
        if self.train_periods < 1:
            raise ValidationError("train_periods must be >= 1")
        if not self.delta_grid or min(self.delta_grid) < 0:
            raise ValidationError("delta grid must be nonempty with entries >= 0")
        if not 0 <= self.seed < 2**64:
            raise ValidationError("seed must be a 64-bit unsigned integer")
        if self.threads < 1:
            raise ValidationError("threads must be >= 1")

    def windows(self) -> tuple[slice, slice]:
        total = self.universe.n_periods
        a = self.train_start
        b = a + self.train_periods
        end = total if self.test_periods is None else b + self.test_periods
        if a < 0 or b >= end or end > total:
            raise InsufficientData(
                f"train [{a}, {b}) and test [{b}, {end}) do not fit in {total} return periods")
        if self.subset_size > self.universe.n_assets:
            raise InsufficientData(
                f"subset of {self.subset_size} from {self.universe.n_assets} assets")
        return slice(a, b), slice(b, end)

    def metadata(self) -> dict:
        train, test = self.windows()
        dates = self.universe.dates
        return {
            "seed": self.seed, "trials": self.trials, "subset_size": self.subset_size,
            "delta_grid": list(self.delta_grid), "p": self.p, "norm": self.norm.value,
            "periods_per_year": self.periods_per_year,
            "n_assets": self.universe.n_assets,
            "train_periods": [train.start, train.stop],
            "test_periods": [test.start, test.stop],
            "train_dates": [str(dates[train.start + 1]), str(dates[train.stop])],
            "test_dates": [str(dates[test.start + 1]), str(dates[test.stop])],
            "quantile_method": "inclusive (linear interpolation between order statistics, "
                               "median included in both halves)",
            "rbar": "mean absolute log-return over the training window of the subset",
        }


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    """Counter-based substream: key = seed, high counter word = trial index."""
    return np.random.Generator(np.random.Philox(key=seed, counter=[0, 0, 0, trial]))


def draw_subset(seed: int, trial: int, n_assets: int, size: int) -> np.ndarray:
    return np.sort(trial_rng(seed, trial).choice(n_assets, size=size, replace=False))


@dataclass(frozen=True)
class StudyCell:
    trial: int
    delta: float
    epsilon: float
    assets: tuple
    weights: np.ndarray | None
    metrics: MetricsReport | None
    trajectory: Trajectory | None
    error: str | None = None

    @property
    def failed(self) -> bool:
        return self.metrics is None

    @property
    def label(self) -> str:
        return "kelly" if self.delta == 0.0 else "wasserstein_kelly"


def _run_trial(cfg: StudyConfig, trial: int, R_log: np.ndarray, R_simple: np.ndarray,
               train: slice, test: slice) -> list:
    labels = cfg.universe.asset_labels
    idx = draw_subset(cfg.seed, trial, cfg.universe.n_assets, cfg.subset_size)
    names = tuple(labels[i] for i in idx)
    tr = ReturnsMatrix.log(R_log[train][:, idx], names)
    te = ReturnsMatrix.simple(R_simple[test][:, idx], names)
    cells = []
    for d in cfg.delta_grid:
        eps = math.nan
        try:
            w, eps, _, _ = _fit(tr, d, cfg.p, cfg.norm, cfg.settings)
            traj = run_constant_mix(w, te)
            m = performance_metrics(traj, cfg.periods_per_year)
            cells.append(StudyCell(trial, d, eps, names, w.w, m, traj))
        except WKellyError as exc:
            cells.append(StudyCell(trial, d, eps, names, None, None, None,
                                   f"{type(exc).__name__}: {exc}"))
    return cells


def boxplot_stats(values: Sequence[float]) -> dict:
    """Five-number summary plus mean; quartiles use the inclusive convention.

    Non-finite entries are left out of every statistic and counted separately.
    """
    xs = sorted(float(x) for x in values)
    fin = [x for x in xs if math.isfinite(x)]
    out = {"count": len(fin), "nonfinite": len(xs) - len(fin)}
    if not fin:
        out.update(dict.fromkeys(("min", "q1", "median", "q3", "max", "mean"), math.nan))
        return out
    if len(fin) == 1:
        q1 = med = q3 = fin[0]
    else:
        q1, med, q3 = statistics.quantiles(fin, n=4, method="inclusive")
    out.update(min=fin[0], q1=q1, median=med, q3=q3, max=fin[-1],
               mean=math.fsum(fin) / len(fin))
    return out


@dataclass(frozen=True)
class StudyReport:
    config: dict
    cells: tuple
    summary: tuple
    bands: dict

    @property
    def deltas(self) -> tuple:
        return tuple(s["delta"] for s in self.summary)

    def summary_for(self, delta: float) -> dict:
        for s in self.summary:
            if s["delta"] == delta:
                return s
        raise KeyError(delta)

    def to_json(self) -> str:
        cells = []
        for c in self.cells:
            cells.append({
                "trial": c.trial, "delta": c.delta, "label": c.label, "epsilon": c.epsilon,
                "assets": list(c.assets),
                "status": "failed" if c.failed else "ok", "error": c.error,
                "weights": None if c.weights is None else c.weights.tolist(),
                "metrics": None if c.metrics is None else c.metrics.as_dict(),
            })
        bands = [{"delta": d, "mean": b.mean.tolist(), "stdev": b.std.tolist()}
                 for d, b in self.bands.items()]
        return _dumps({"config": self.config, "summary": list(self.summary),
                       "cells": cells, "bands": bands})

    def to_long_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["trial", "delta", "metric", "value"])
        for c in self.cells:
            if c.failed:
                w.writerow([c.trial, _fmt(c.delta), "failed", "1"])
                continue
            for k, v in c.metrics.as_dict().items():
                w.writerow([c.trial, _fmt(c.delta), k, _fmt(v)])
        return buf.getvalue()

    def band_csv(self, delta: float) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "mean", "stdev"])
        for t, m, s in self.bands[delta].rows():
            w.writerow([t, _fmt(m), _fmt(s)])
        return buf.getvalue()


def random_subset_study(cfg: StudyConfig) -> StudyReport:
    """Fit Kelly and robust portfolios on random asset subsets and backtest them.

    Trials run on ``cfg.threads`` worker threads; results are collected in
    trial order so the report does not depend on scheduling.
    """
    train, test = cfg.windows()
    R_log = log_returns(cfg.universe).values
    R_simple = simple_returns(cfg.universe).values

    def job(trial):
        return _run_trial(cfg, trial, R_log, R_simple, train, test)

    if cfg.threads == 1:
        per_trial = [job(t) for t in range(cfg.trials)]
    else:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            per_trial = list(pool.map(job, range(cfg.trials)))
    cells = tuple(c for cs in per_trial for c in cs)

    summary, bands = [], {}
    for d in cfg.delta_grid:
        if d in bands:
            continue
        ok = [c for c in cells if c.delta == d and not c.failed]
        n_failed = sum(1 for c in cells if c.delta == d and c.failed)
        stats = {m: boxplot_stats([getattr(c.metrics, m) for c in ok]) for m in METRIC_NAMES}
        summary.append({"delta": d, "label": "kelly" if d == 0.0 else "wasserstein_kelly",
                        "n_ok": len(ok), "n_failed": n_failed, "boxplot": stats})
        if ok:
            bands[d] = aggregate_trajectories([c.trajectory for c in ok])
        else:
            n = test.stop - test.start + 1
            bands[d] = BandSummary(np.full(n, math.nan), np.full(n, math.nan))
    return StudyReport(cfg.metadata(), cells, tuple(summary), bands)


def study_report_schema() -> dict:
    """JSON schema that :meth:`StudyReport.to_json` output conforms to."""
    from importlib.resources import files

    return json.loads(files("wkelly").joinpath("schemas/study_report.schema.json").read_text())


# --------------------------------------------------------------------------
# serialization helpers
# --------------------------------------------------------------------------

def _fmt(x) -> str:
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(x)


def _jsonable(obj):
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else _fmt(obj)
    if isinstance(obj, (np.floating,)):
        return _jsonable(float(obj))
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def _dumps(obj) -> str:
    return json.dumps(_jsonable(obj), sort_keys=True, indent=1, allow_nan=False) + "\n"
