import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wkelly import (DegenerateData, MissingValue, NonMonotoneDates, NonPositivePrice, ParseError,
                    PriceTable, ReturnKind, ReturnsMatrix, convert_returns, epsilon_from_delta,
                    load_prices, log_returns, simple_returns, synthetic_universe, write_prices)


def _write(tmp_path, text, name="p.csv"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


def test_minimal_file(tmp_path):
    pt = load_prices(_write(tmp_path, "date,X\n2020-01-02,100\n2020-01-03,110\n"))
    assert pt.n_periods == 1
    assert pt.asset_labels == ("X",)
    assert log_returns(pt).values[0, 0] == pytest.approx(0.0953102, abs=1e-7)
    assert simple_returns(pt).values[0, 0] == pytest.approx(0.1, abs=1e-15)


def test_missing_cell_location(tmp_path):
    path = _write(tmp_path, "date,X,Y\n2020-01-02,100,5\n2020-01-03,,6\n")
    with pytest.raises(MissingValue) as info:
        load_prices(path)
    assert info.value.line == 3
    assert info.value.column == "X"
    assert str(path) in str(info.value)


def test_unsorted_dates(tmp_path):
    with pytest.raises(NonMonotoneDates) as info:
        load_prices(_write(tmp_path, "date,X\n2020-01-03,100\n2020-01-02,110\n"))
    assert info.value.line == 3


def test_non_positive_and_malformed(tmp_path):
    with pytest.raises(NonPositivePrice):
        load_prices(_write(tmp_path, "date,X\n2020-01-02,100\n2020-01-03,0\n"))
    with pytest.raises(ParseError):
        load_prices(_write(tmp_path, "date,X\n2020-01-02,100\n2020-01-03,abc\n"))
    with pytest.raises(ParseError):
        load_prices(_write(tmp_path, "date,X\n2020-01-02,100,3\n"))
    with pytest.raises(ParseError):
        load_prices(_write(tmp_path, "day,X\n2020-01-02,100\n"))


def test_column_order_preserved(tmp_path):
    pt = load_prices(_write(tmp_path, "date,Z,A,M\n2020-01-02,1,2,3\n2020-01-03,2,2,3\n"))
    assert pt.asset_labels == ("Z", "A", "M")
    np.testing.assert_array_equal(pt.prices[0], [1, 2, 3])


def test_return_examples():
    pt = PriceTable(("a", "b", "c"), [[100.0], [110.0], [99.0]], ("X",))
    np.testing.assert_allclose(log_returns(pt).values[:, 0], [math.log(1.1), math.log(0.9)],
                               atol=1e-15)
    np.testing.assert_allclose(simple_returns(pt).values[:, 0], [0.1, -0.1], atol=1e-14)
    flat = PriceTable(("a", "b", "c"), [[5.0, 7.0]] * 3, ("X", "Y"))
    assert not log_returns(flat).values.any()
    assert not simple_returns(flat).values.any()


@settings(max_examples=50)
@given(st.integers(0, 2**32 - 1))
def test_log_and_simple_consistent(seed):
    pt = synthetic_universe(3, 20, seed=seed)
    conv = convert_returns(simple_returns(pt), ReturnKind.LOG)
    np.testing.assert_allclose(conv.values, log_returns(pt).values, atol=1e-12)


def test_csv_round_trip(tmp_path):
    pt = synthetic_universe(4, 30, seed=9)
    write_prices(pt, tmp_path / "u.csv")
    back = load_prices(tmp_path / "u.csv")
    np.testing.assert_array_equal(back.prices, pt.prices)
    assert back.dates == pt.dates


def test_epsilon_examples():
    S = ReturnsMatrix.log([[0.02, -0.02], [-0.02, 0.02]])
    assert epsilon_from_delta(S, 0.1).epsilon == pytest.approx(0.002)
    assert epsilon_from_delta(S, 0.0).epsilon == 0.0
    mixed = ReturnsMatrix.log([[0.01, -0.03]])
    assert epsilon_from_delta(mixed, 1.0).rbar == pytest.approx(0.02)
    with pytest.raises(DegenerateData):
        epsilon_from_delta(ReturnsMatrix.log(np.zeros((2, 2))), 0.1)
    assert epsilon_from_delta(ReturnsMatrix.log(np.zeros((2, 2))), 0.0).epsilon == 0.0


@given(st.floats(0, 100), st.floats(0, 100))
def test_epsilon_linear_in_delta(a, b):
    S = ReturnsMatrix.log([[0.01, -0.03], [0.02, 0.0]])
    lhs = epsilon_from_delta(S, a + b).epsilon
    rhs = epsilon_from_delta(S, a).epsilon + epsilon_from_delta(S, b).epsilon
    assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-15)


def test_synthetic_universe_is_seeded():
    a = synthetic_universe(5, 40, seed=1)
    b = synthetic_universe(5, 40, seed=1)
    np.testing.assert_array_equal(a.prices, b.prices)
    assert a.n_assets == 5 and a.n_periods == 40
    assert all(d.weekday() < 5 for d in a.dates)
