"""Price tables, return matrices and the radius scaling rule."""
from __future__ import annotations

import csv
import datetime as dt
import io
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .domain import ReturnKind, ReturnsMatrix
from .errors import (DegenerateData, MissingValue, NonMonotoneDates, NonPositivePrice,
                     ParseError, ValidationError)


@dataclass(frozen=True)
class PriceTable:
    """``T + 1`` dated price rows for ``n`` assets."""

    dates: tuple
    prices: np.ndarray
    asset_labels: tuple

    def __post_init__(self):
        P = np.array(self.prices, dtype=float)
        if P.ndim != 2 or P.shape[0] != len(self.dates) or P.shape[1] != len(self.asset_labels):
            raise ValidationError("prices must be (len(dates), len(asset_labels))")
        if P.shape[1] < 1:
            raise ValidationError("need at least one asset")
        if not np.all(np.isfinite(P)):
            raise MissingValue("non-finite price")
        if np.any(P <= 0):
            raise NonPositivePrice("prices must be positive")
        for a, b in zip(self.dates, self.dates[1:]):
            if not a < b:
                raise NonMonotoneDates(f"dates not strictly increasing at {b}")
        P.setflags(write=False)
        object.__setattr__(self, "prices", P)
        object.__setattr__(self, "dates", tuple(self.dates))
        object.__setattr__(self, "asset_labels", tuple(str(x) for x in self.asset_labels))

    @property
    def n_periods(self) -> int:
        return self.prices.shape[0] - 1

    @property
    def n_assets(self) -> int:
        return self.prices.shape[1]

    def select(self, rows=slice(None), cols=None) -> "PriceTable":
        cols = list(range(self.n_assets)) if cols is None else list(cols)
        dates = self.dates[rows]
        return PriceTable(tuple(dates), self.prices[rows][:, cols],
                          tuple(self.asset_labels[c] for c in cols))


def _parse_date(text: str):
    try:
        return dt.date.fromisoformat(text)
    except ValueError:
        return None


def load_prices(path, format: str = "WideCSV") -> PriceTable:
    """Read a wide CSV: header ``date,<label>,...``, one row per period.

    Dates are ISO ``YYYY-MM-DD``; other labels are compared as strings,
    which is only meaningful for zero-padded identifiers.  Errors carry the
    file path, 1-based line and column.
    """
    if format != "WideCSV":
        raise ValidationError(f"unknown price format {format!r}")
    path = str(path)
    with open(path, newline="", encoding="utf-8") as fh:
        text = fh.read()
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise ParseError("empty file", path, 1) from None
    header = [h.strip() for h in header]
    if not header or header[0].lower() != "date":
        raise ParseError("first header must be 'date'", path, 1, header[0] if header else None)
    labels = header[1:]
    if not labels:
        raise ParseError("no asset columns", path, 1)
    if len(set(labels)) != len(labels):
        raise ParseError("duplicate asset label", path, 1)
    raw_dates, rows = [], []
    for row in reader:
        line = reader.line_num
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise ParseError(f"expected {len(header)} fields, found {len(row)}", path, line)
        d = row[0].strip()
        if not d:
            raise MissingValue("missing date", path, line, "date")
        vals = []
        for c, cell in enumerate(row[1:], start=2):
            cell = cell.strip()
            if not cell:
                raise MissingValue("empty cell", path, line, labels[c - 2])
            try:
                x = float(cell)
            except ValueError:
                raise ParseError(f"not a number: {cell!r}", path, line, labels[c - 2]) from None
            if not math.isfinite(x):
                raise MissingValue(f"non-finite price {cell!r}", path, line, labels[c - 2])
            if x <= 0:
                raise NonPositivePrice(f"price {cell} is not positive", path, line, labels[c - 2])
            vals.append(x)
        raw_dates.append((d, line))
        rows.append(vals)
    if len(rows) < 1:
        raise ParseError("no data rows", path, 2)
    parsed = [_parse_date(d) for d, _ in raw_dates]
    keys = parsed if all(p is not None for p in parsed) else [d for d, _ in raw_dates]
    for (prev, cur), (_, line) in zip(zip(keys, keys[1:]), raw_dates[1:]):
        if not prev < cur:
            raise NonMonotoneDates(f"date {cur} does not follow {prev}", path, line, "date")
    return PriceTable(tuple(keys), np.array(rows), tuple(labels))


def write_prices(pt: PriceTable, path_or_file) -> None:
    """Write ``pt`` in the wide CSV layout read by :func:`load_prices`."""
    own = isinstance(path_or_file, (str, Path))
    fh = open(path_or_file, "w", newline="", encoding="utf-8") if own else path_or_file
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["date", *pt.asset_labels])
        for d, row in zip(pt.dates, pt.prices):
            w.writerow([str(d), *(repr(float(x)) for x in row)])
    finally:
        if own:
            fh.close()


def log_returns(pt: PriceTable) -> ReturnsMatrix:
    if pt.n_periods < 1:
        raise ValidationError("need at least two price rows")
    P = pt.prices
    return ReturnsMatrix(np.log(P[1:] / P[:-1]), ReturnKind.LOG, pt.asset_labels)


def simple_returns(pt: PriceTable) -> ReturnsMatrix:
    if pt.n_periods < 1:
        raise ValidationError("need at least two price rows")
    P = pt.prices
    return ReturnsMatrix(P[1:] / P[:-1] - 1.0, ReturnKind.SIMPLE, pt.asset_labels)


@dataclass(frozen=True)
class EpsilonRule:
    """Radius ``epsilon = delta_scale * rbar`` with ``rbar`` the mean absolute log-return."""

    delta_scale: float
    rbar: float

    @property
    def epsilon(self) -> float:
        return self.delta_scale * self.rbar


def epsilon_from_delta(samples: ReturnsMatrix, delta_scale: float) -> EpsilonRule:
    if samples.kind is not ReturnKind.LOG:
        raise ValidationError("samples must be log-returns")
    delta_scale = float(delta_scale)
    if not delta_scale >= 0 or math.isinf(delta_scale):
        raise ValidationError("delta_scale must be finite and >= 0")
    rbar = float(np.mean(np.abs(samples.values)))
    if rbar == 0.0 and delta_scale > 0:
        raise DegenerateData("all returns are zero; the radius scale is undefined")
    return EpsilonRule(delta_scale, rbar)


def synthetic_universe(n_assets: int, n_periods: int, seed: int, nu: float = 4.0,
                       daily_scale: float = 0.01, drift: float = 2e-4,
                       start: dt.date = dt.date(2019, 1, 1)) -> PriceTable:
    """Prices driven by i.i.d. Student-t log-returns.

    Each asset gets its own drift and volatility, drawn once, so the
    universe is heterogeneous but stationary.  Dates are consecutive
    weekdays from ``start``.
    """
    rng = np.random.default_rng(seed)
    vol = daily_scale * rng.uniform(0.6, 1.6, n_assets)
    mu = drift * rng.normal(1.0, 1.0, n_assets)
    t_scale = math.sqrt((nu - 2.0) / nu) if nu > 2 else 1.0
    r = mu + vol * t_scale * rng.standard_t(nu, size=(n_periods, n_assets))
    prices = 100.0 * np.exp(np.vstack([np.zeros(n_assets), np.cumsum(r, axis=0)]))
    dates, d = [], start
    while len(dates) < n_periods + 1:
        if d.weekday() < 5:
            dates.append(d)
        d += dt.timedelta(days=1)
    width = len(str(n_assets))
    labels = tuple(f"A{i:0{width}d}" for i in range(n_assets))
    return PriceTable(tuple(dates), prices, labels)
