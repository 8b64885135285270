"""Command-line interface.

Exit codes: 0 success, 1 invalid input or usage, 2 solver failure (or a
failed duality check), 3 I/O error.  Data goes to standard output or
``--out``; human-readable summaries go to standard error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from typing import Sequence

import numpy as np

from .backtest import performance_metrics, run_constant_mix
from .data import (epsilon_from_delta, load_prices, log_returns, simple_returns,
                   synthetic_universe)
from .domain import BallSpec, Norm, SolverSettings, make_weights
from .errors import ParseError, SolverFailure, ValidationError, WKellyError
from .experiments import StudyConfig, _dumps, _fmt, diversification_sweep, random_subset_study
from .kelly import solve_kelly
from .oracle import duality_suite, robust_objective
from .robust import solve_wkelly

EXIT_OK, EXIT_INPUT, EXIT_SOLVER, EXIT_IO = 0, 1, 2, 3
DUALITY_TOLERANCE = 1e-5


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}")


def _add_radius(p):
    g = p.add_mutually_exclusive_group()
    g.add_argument("--delta", type=float, help="radius as a multiple of the mean absolute log-return")
    g.add_argument("--epsilon", type=float, help="absolute radius in log-return units")


def _add_ball(p):
    p.add_argument("--p", type=float, default=2.0, choices=[1.0, 2.0], help="Wasserstein order")
    p.add_argument("--norm", default="l2", choices=["l2", "l1", "linf"], help="ground norm")


def _add_output(p, default="json"):
    p.add_argument("--format", choices=["csv", "json"], default=default)
    p.add_argument("--out", help="output file (default: standard output)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="wkelly", description="Kelly and Wasserstein-Kelly portfolios")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("optimize", help="fit a Kelly or robust portfolio to a price file")
    p.add_argument("--prices", required=True)
    _add_radius(p)
    _add_ball(p)
    _add_output(p)

    p = sub.add_parser("robust-objective", help="worst-case log growth of given weights")
    p.add_argument("--prices", required=True)
    p.add_argument("--weights", required=True, type=_float_list)
    _add_radius(p)
    _add_ball(p)
    _add_output(p)

    p = sub.add_parser("backtest", help="constant-mix backtest of fitted portfolios")
    p.add_argument("--prices", required=True)
    p.add_argument("--train-days", type=int, required=True)
    p.add_argument("--deltas", type=_float_list, default=[0.0])
    p.add_argument("--weights", type=_float_list, help="backtest these weights instead of fitting")
    p.add_argument("--periods-per-year", type=int, default=252)
    _add_ball(p)
    _add_output(p)

    p = sub.add_parser("sweep", help="portfolio composition over a grid of radius scales")
    p.add_argument("--prices", required=True)
    p.add_argument("--deltas", type=_float_list, required=True)
    _add_ball(p)
    _add_output(p, default="csv")

    p = sub.add_parser("study", help="randomized subset out-of-sample study")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--prices")
    src.add_argument("--synthetic-assets", type=int, help="generate a Student-t universe instead")
    p.add_argument("--synthetic-nu", type=float, default=4.0)
    p.add_argument("--train-days", type=int, default=252)
    p.add_argument("--test-days", type=int)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--subset-size", type=int, default=10)
    p.add_argument("--deltas", type=_float_list, default=[0.0, 0.1, 0.2, 0.3, 0.4])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--periods-per-year", type=int, default=252)
    p.add_argument("--bands-out", help="write per-delta value bands (t, mean, stdev) to this CSV")
    _add_ball(p)
    _add_output(p)

    p = sub.add_parser("check-duality", help="compare the two inner-problem routes on random instances")
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--instances", type=int, default=100)
    p.add_argument("--out", help="per-instance CSV (default: none)")
    return parser


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _csv(rows: Sequence[Sequence]) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    return buf.getvalue()


def _ball(args, samples) -> tuple[BallSpec, float | None]:
    if args.delta is None and args.epsilon is None:
        raise UsageError("one of --delta or --epsilon is required")
    if args.delta is not None:
        rule = epsilon_from_delta(samples, args.delta)
        return BallSpec(args.p, rule.epsilon, args.norm), args.delta
    return BallSpec(args.p, args.epsilon, args.norm), None


def _cmd_optimize(args) -> int:
    samples = log_returns(load_prices(args.prices))
    ball, delta = _ball(args, samples)
    if ball.epsilon == 0.0:
        ks = solve_kelly(samples)
        w, obj, status, lam = ks.weights.w, ks.objective, ks.status.value, math.inf
    else:
        sol = solve_wkelly(samples, ball)
        w, obj, status, lam = sol.weights.w, sol.objective, sol.status.value, sol.lam
    labels = samples.asset_labels
    if args.format == "json":
        _emit(_dumps({"weights": dict(zip(labels, w.tolist())), "epsilon": ball.epsilon,
                      "delta": delta, "p": ball.p, "norm": ball.norm.value,
                      "objective": obj, "lambda": lam, "status": status}), args.out)
    else:
        _emit(_csv([["asset", "weight"], *[[a, _fmt(x)] for a, x in zip(labels, w)]]), args.out)
    print(f"objective={obj:.10g} epsilon={ball.epsilon:.6g} status={status}", file=sys.stderr)
    return EXIT_OK


def _cmd_robust_objective(args) -> int:
    samples = log_returns(load_prices(args.prices))
    ball, delta = _ball(args, samples)
    w = make_weights(args.weights)
    val = robust_objective(w.w, samples, ball)
    if args.format == "json":
        _emit(_dumps({"weights": w.w.tolist(), "epsilon": ball.epsilon, "delta": delta,
                      "p": ball.p, "norm": ball.norm.value, "robust_objective": val}), args.out)
    else:
        _emit(_csv([["epsilon", "robust_objective"], [_fmt(ball.epsilon), _fmt(val)]]), args.out)
    return EXIT_OK


def _cmd_backtest(args) -> int:
    pt = load_prices(args.prices)
    T = pt.n_periods
    if not 1 <= args.train_days < T:
        raise ValidationError(f"--train-days must be in [1, {T - 1}]")
    train = log_returns(pt.select(slice(0, args.train_days + 1)))
    test = simple_returns(pt.select(slice(args.train_days, None)))
    if args.weights is not None:
        fits = [("given", None, make_weights(args.weights))]
    else:
        fits = []
        for d in sorted(args.deltas):
            eps = epsilon_from_delta(train, d).epsilon
            w = solve_kelly(train).weights if d == 0 else solve_wkelly(
                train, BallSpec(args.p, eps, args.norm)).weights
            fits.append(("kelly" if d == 0 else "wasserstein_kelly", d, w))
    results = []
    for label, d, w in fits:
        m = performance_metrics(run_constant_mix(w, test), args.periods_per_year)
        results.append((label, d, w, m))
    if args.format == "json":
        _emit(_dumps([{"label": lab, "delta": d, "weights": w.w.tolist(), "metrics": m.as_dict()}
                      for lab, d, w, m in results]), args.out)
    else:
        keys = list(results[0][3].as_dict())
        rows = [["label", "delta", *keys]]
        rows += [[lab, "" if d is None else _fmt(d), *(_fmt(v) for v in m.as_dict().values())]
                 for lab, d, w, m in results]
        _emit(_csv(rows), args.out)
    return EXIT_OK


def _cmd_sweep(args) -> int:
    samples = log_returns(load_prices(args.prices))
    table = diversification_sweep(samples, args.deltas, p=args.p, norm=args.norm)
    _emit(table.to_csv() if args.format == "csv" else table.to_json(), args.out)
    failed = sum(r.failed for r in table.rows)
    print(f"{len(table.rows)} rows, {failed} failed", file=sys.stderr)
    return EXIT_OK


def _cmd_study(args) -> int:
    if args.prices:
        universe = load_prices(args.prices)
    else:
        n = args.synthetic_assets or 20
        test_days = args.test_days if args.test_days is not None else 250
        universe = synthetic_universe(n, args.train_days + test_days, seed=args.seed,
                                      nu=args.synthetic_nu)
    cfg = StudyConfig(universe, subset_size=args.subset_size, train_periods=args.train_days,
                      test_periods=args.test_days, trials=args.trials,
                      delta_grid=tuple(args.deltas), seed=args.seed, p=args.p, norm=args.norm,
                      periods_per_year=args.periods_per_year, threads=args.threads)
    report = random_subset_study(cfg)
    _emit(report.to_json() if args.format == "json" else report.to_long_csv(), args.out)
    if args.bands_out:
        rows = [["delta", "t", "mean", "stdev"]]
        for d, band in report.bands.items():
            rows += [[_fmt(d), t, _fmt(m), _fmt(s)] for t, m, s in band.rows()]
        with open(args.bands_out, "w", encoding="utf-8", newline="") as fh:
            fh.write(_csv(rows))
    for s in report.summary:
        vol = s["boxplot"]["annualized_volatility"]["mean"]
        print(f"delta={s['delta']:g} ok={s['n_ok']} failed={s['n_failed']} "
              f"mean_volatility={vol:.6g}", file=sys.stderr)
    return EXIT_OK


def _cmd_check_duality(args) -> int:
    if args.instances < 1:
        raise ValidationError("--instances must be >= 1")
    rows = duality_suite(args.seed, args.instances)
    gap = max(r[-1] for r in rows)
    if args.out:
        _emit(_csv([["n", "N", "lambda", "gap"], *[[a, b, _fmt(c), _fmt(d)] for a, b, c, d in rows]]),
              args.out)
    print(f"max_gap={gap:.6g}")
    return EXIT_OK if gap <= DUALITY_TOLERANCE else EXIT_SOLVER


COMMANDS = {
    "optimize": _cmd_optimize,
    "robust-objective": _cmd_robust_objective,
    "backtest": _cmd_backtest,
    "sweep": _cmd_sweep,
    "study": _cmd_study,
    "check-duality": _cmd_check_duality,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_INPUT
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"wkelly {args.command}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except SolverFailure as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (ParseError, OSError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValidationError, WKellyError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
