import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wkelly import (LengthMismatch, ReturnsMatrix, Trajectory, aggregate_trajectories,
                    performance_metrics, run_constant_mix)


def test_constant_mix_examples():
    tr = run_constant_mix([1.0, 0.0], ReturnsMatrix.simple(np.zeros((3, 2))))
    np.testing.assert_array_equal(tr.values, [1, 1, 1, 1])
    tr = run_constant_mix([1.0], ReturnsMatrix.simple([[0.1], [-0.1]]))
    assert tr.values[-1] == pytest.approx(0.99, abs=1e-15)
    tr = run_constant_mix([0.5, 0.5], ReturnsMatrix.simple([[0.2, -0.1]]))
    assert tr.values[1] == pytest.approx(1.05, abs=1e-15)


def test_constant_mix_requires_simple_returns():
    with pytest.raises(Exception):
        run_constant_mix([1.0], ReturnsMatrix.log([[0.1]]))


@settings(max_examples=50)
@given(st.integers(0, 2**32 - 1))
def test_single_asset_reproduces_own_path(seed):
    R = np.random.default_rng(seed).uniform(-0.5, 0.5, (30, 1))
    tr = run_constant_mix([1.0], ReturnsMatrix.simple(R))
    np.testing.assert_array_equal(tr.values, np.concatenate(([1.0], np.cumprod(1 + R[:, 0]))))


def test_metrics_flat_path():
    m = performance_metrics(Trajectory(np.ones(5), np.zeros(4)))
    assert m.annualized_volatility == 0.0
    assert m.max_drawdown == 0.0
    assert m.growth_rate == 0.0
    assert m.sharpe_ratio == 0.0
    assert m.zero_volatility


def test_metrics_one_year_return():
    r = np.full(252, 1.1 ** (1 / 252) - 1)
    tr = Trajectory(np.concatenate(([1.0], np.cumprod(1 + r))), r)
    m = performance_metrics(tr, 252)
    assert m.annualized_return == pytest.approx(0.1, abs=1e-12)
    assert m.sharpe_ratio == math.inf


def test_metrics_drawdown_example():
    v = np.array([1.0, 1.2, 0.9, 1.05])
    m = performance_metrics(Trajectory(v, v[1:] / v[:-1] - 1))
    assert m.max_drawdown == pytest.approx(0.25, abs=1e-15)


def test_metrics_definitions():
    rng = np.random.default_rng(0)
    r = rng.normal(0.001, 0.01, 100)
    tr = Trajectory(np.concatenate(([1.0], np.cumprod(1 + r))), r)
    m = performance_metrics(tr, 252)
    assert m.annualized_volatility == pytest.approx(np.std(r, ddof=1) * math.sqrt(252))
    assert m.annualized_return == pytest.approx(tr.values[-1] ** (252 / 100) - 1, rel=1e-12)
    assert m.sharpe_ratio == pytest.approx(m.annualized_return / m.annualized_volatility)
    assert m.log_final_value == pytest.approx(math.log(tr.values[-1]), abs=1e-12)


@settings(max_examples=100)
@given(st.integers(0, 2**32 - 1))
def test_drawdown_bounds(seed):
    r = np.random.default_rng(seed).uniform(-0.3, 0.3, 50)
    tr = Trajectory(np.concatenate(([1.0], np.cumprod(1 + r))), r)
    assert 0.0 <= performance_metrics(tr).max_drawdown < 1.0


def test_aggregate_examples():
    tr = Trajectory([1.0, 1.1, 1.21], [0.1, 0.1])
    band = aggregate_trajectories([tr])
    np.testing.assert_array_equal(band.mean, tr.values)
    np.testing.assert_array_equal(band.std, 0.0)
    up = Trajectory([1.0, 1.1], [0.1])
    down = Trajectory([1.0, 0.9], [-0.1])
    np.testing.assert_allclose(aggregate_trajectories([up, down]).mean, [1.0, 1.0])
    with pytest.raises(LengthMismatch):
        aggregate_trajectories([up, tr])


def test_aggregate_matches_two_pass_statistics():
    rng = np.random.default_rng(3)
    trs = []
    for _ in range(3):
        r = rng.normal(0, 0.02, 10)
        trs.append(Trajectory(np.concatenate(([1.0], np.cumprod(1 + r))), r))
    band = aggregate_trajectories(trs)
    for t in range(11):
        xs = [tr.values[t] for tr in trs]
        mean = sum(xs) / 3
        var = sum((x - mean) ** 2 for x in xs) / 3
        assert band.mean[t] == pytest.approx(mean, abs=1e-15)
        assert band.std[t] == pytest.approx(math.sqrt(var), abs=1e-15)
