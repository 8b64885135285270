"""Acceptance criteria; each test records one PASS/FAIL line with the measured value.

The lines are printed in the pytest terminal summary (see ``conftest.py``)
and also when this file is executed directly.
"""
import json
import math
import time

import jsonschema
import numpy as np
import pytest

from wkelly import (BallSpec, ReturnsMatrix, Trajectory, diversification_sweep, log_returns,
                    performance_metrics, robust_objective, solve_kelly, solve_wkelly,
                    synthetic_universe)
from wkelly.backtest import METRIC_NAMES
from wkelly.cli import main as cli_main
from wkelly.experiments import study_report_schema
from wkelly.oracle import duality_suite

from conftest import small_instances

RESULTS = {}

STUDY_ARGS = ["study", "--synthetic-assets", "20", "--synthetic-nu", "4", "--train-days", "60",
              "--test-days", "250", "--trials", "200", "--subset-size", "10",
              "--deltas", "0,0.1,0.2,0.4", "--seed", "20240601", "--format", "json"]


def record(number, title, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} criterion {number:>2}: {title} -- {detail}"
    RESULTS[number] = line
    print(line)
    assert ok, line


@pytest.fixture(scope="module")
def strong_duality_instances():
    return small_instances(20, seed=2024, max_n=3, max_N=5)


def test_01_fenchel_duality_suite():
    t0 = time.perf_counter()
    rows = duality_suite(seed=7, instances=100)
    elapsed = time.perf_counter() - t0
    gap = max(r[-1] for r in rows)
    record(1, "Fenchel duality suite", len(rows) >= 100 and gap <= 1e-5 and elapsed < 60,
           f"{len(rows)} instances, max gap {gap:.2e} (tol 1e-5), {elapsed:.1f} s (limit 60 s)")


def test_02_end_to_end_strong_duality(strong_duality_instances):
    gaps = []
    for S in strong_duality_instances:
        ball = BallSpec(2, 0.02, "l2")
        sol = solve_wkelly(S, ball)
        gaps.append(abs(sol.objective - robust_objective(sol.weights.w, S, ball)))
    worst = max(gaps)
    record(2, "solver vs oracle robust objective (p=2)", worst <= 1e-4,
           f"{len(gaps)} instances, max |diff| {worst:.2e} (tol 1e-4)")


def test_03_saa_recovery(dominance):
    ks = solve_kelly(dominance)
    sol = solve_wkelly(dominance, BallSpec(2, 0.0))
    dw = float(np.abs(sol.weights.w - ks.weights.w).max())
    vertex = float(np.abs(ks.weights.w - [1.0, 0.0]).max())
    dobj = abs(sol.objective - ks.objective)
    record(3, "zero-radius recovers Kelly", dw <= 1e-4 and vertex <= 1e-4 and dobj <= 1e-6,
           f"|dw| {dw:.1e} (tol 1e-4), distance to vertex {vertex:.1e}, |dobj| {dobj:.1e} (tol 1e-6)")


def test_04_single_asset_closed_form():
    S = ReturnsMatrix.log(np.random.default_rng(4).normal(0.0005, 0.01, (40, 1)))
    errs = [abs(solve_wkelly(S, BallSpec(2, e)).objective - (S.values.mean() - e))
            for e in (0.001, 0.01, 0.1)]
    record(4, "n=1 closed form mean - eps", max(errs) <= 1e-6,
           f"errors {', '.join(f'{e:.1e}' for e in errs)} (tol 1e-6)")


def test_05_uniform_limit(ten_asset):
    row = diversification_sweep(ten_asset, [50.0]).rows[0]
    dev = float(np.abs(row.weights.w - 0.1).max())
    record(5, "delta=50 approaches 1/N", dev <= 1e-2, f"max |w - 0.1| {dev:.2e} (tol 1e-2)")


def test_06_monotone_in_radius():
    worst = -math.inf
    for seed in (101, 202, 303):
        S = log_returns(synthetic_universe(5, 40, seed=seed))
        vals = [solve_wkelly(S, BallSpec(2, e)).objective for e in (0.0, 0.001, 0.01, 0.1, 1.0)]
        worst = max(worst, max(b - a for a, b in zip(vals, vals[1:])))
    record(6, "objective non-increasing in eps", worst <= 1e-8,
           f"largest increase {worst:.1e} over 3 fixtures (tol 1e-8)")


def test_07_order_one_variant(strong_duality_instances):
    gaps, viol = [], -math.inf
    for S in strong_duality_instances:
        ball = BallSpec(1, 0.02, "l2")
        sol = solve_wkelly(S, ball)
        gaps.append(abs(sol.objective - robust_objective(sol.weights.w, S, ball)))
        viol = max(viol, float(np.max(ball.dual_norm.rowwise(sol.v) - sol.lam)))
    worst = max(gaps)
    record(7, "p=1 program vs oracle", worst <= 1e-4 and viol <= 1e-8,
           f"max |diff| {worst:.2e} (tol 1e-4), max |v_j|_* - lambda {viol:.1e} (tol 1e-8)")


def _drawdown_double_loop(v):
    worst = 0.0
    for j in range(len(v)):
        for i in range(j + 1):
            worst = max(worst, (v[i] - v[j]) / v[i])
    return worst


def test_08_backtest_identities():
    rng = np.random.default_rng(8)
    growth_err = dd_err = 0.0
    for _ in range(100):
        T = int(rng.integers(1, 300))
        r = rng.normal(0.0005, 0.02, T)
        v = np.concatenate(([1.0], np.cumprod(1 + r)))
        m = performance_metrics(Trajectory(v, r))
        growth_err = max(growth_err, abs(m.growth_rate - math.log(v[-1]) / T))
        dd_err = max(dd_err, abs(m.max_drawdown - _drawdown_double_loop(v.tolist())))
    record(8, "growth-rate identity and drawdown", growth_err <= 1e-12 and dd_err <= 1e-12,
           f"max growth drift {growth_err:.1e} (tol 1e-12), max drawdown diff {dd_err:.1e}")


@pytest.fixture(scope="module")
def study_runs(tmp_path_factory):
    """The seeded study run three times: threads 4, threads 1, threads 4 again."""
    d = tmp_path_factory.mktemp("study")
    runs = []
    for k, threads in enumerate((4, 1, 4)):
        out = d / f"run{k}.json"
        t0 = time.perf_counter()
        code = cli_main(STUDY_ARGS + ["--threads", str(threads), "--out", str(out)])
        runs.append((code, time.perf_counter() - t0, out.read_bytes() if out.exists() else b""))
    return runs


def test_09_synthetic_study(study_runs):
    code, elapsed, payload = study_runs[0]
    doc = json.loads(payload)
    jsonschema.validate(doc, study_report_schema())
    summ = {s["delta"]: s for s in doc["summary"]}
    # independent quantiles of the per-trial metrics
    stats_ok = True
    for s in doc["summary"]:
        for metric in METRIC_NAMES:
            xs = np.array([c["metrics"][metric] for c in doc["cells"]
                           if c["delta"] == s["delta"] and c["status"] == "ok"], dtype=float)
            xs = xs[np.isfinite(xs)]
            ref = np.percentile(xs, [0, 25, 50, 75, 100], method="linear")
            box = s["boxplot"][metric]
            got = [box[k] for k in ("min", "q1", "median", "q3", "max")]
            stats_ok &= bool(np.allclose(got, ref, rtol=0, atol=1e-12))
    counts_ok = len(doc["cells"]) == 200 * 4
    vol0 = summ[0.0]["boxplot"]["annualized_volatility"]["mean"]
    vol4 = summ[0.4]["boxplot"]["annualized_volatility"]["mean"]
    failed = sum(s["n_failed"] for s in doc["summary"])
    ok = code == 0 and elapsed < 600 and counts_ok and stats_ok and vol4 <= vol0
    record(9, "synthetic study", ok,
           f"{elapsed:.0f} s (limit 600 s), schema valid, {len(doc['cells'])} cells, "
           f"{failed} failed, quantiles match: {stats_ok}, "
           f"mean vol delta=0.4 {vol4:.4f} <= delta=0 {vol0:.4f}")


def test_10_determinism(study_runs):
    payloads = [p for _, _, p in study_runs]
    same = all(p == payloads[0] for p in payloads) and len(payloads[0]) > 0
    record(10, "byte-identical study reports", same,
           f"3 runs (threads 4, 1, 4), {len(payloads[0])} bytes each, identical: {same}")


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q"]))
