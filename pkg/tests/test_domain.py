import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from wkelly import (BallSpec, DomainError, NegativeWeight, Norm, ReturnKind, ReturnsMatrix,
                    SumMismatch, Unbounded, UnsupportedOrder, ValidationError, convert_returns,
                    make_weights, uniform_weights)
from wkelly.domain import ext_from_float, ext_to_float


def test_make_weights_examples():
    assert make_weights([1.0]).w.tolist() == [1.0]
    assert make_weights([0.5, 0.5]).w.tolist() == [0.5, 0.5]
    with pytest.raises(SumMismatch):
        make_weights([0.6, 0.6])


def test_make_weights_rejects_negative_and_empty():
    with pytest.raises(NegativeWeight):
        make_weights([1.1, -0.1])
    with pytest.raises(ValidationError):
        make_weights([])


def test_make_weights_does_not_renormalize():
    w = make_weights([0.5, 0.5 + 5e-9])
    assert w.w[1] == 0.5 + 5e-9


@given(arrays(float, st.integers(1, 6), elements=st.floats(-0.5, 1.5)))
def test_make_weights_accepts_exactly_the_simplex(raw):
    ok = bool(np.all(raw >= -1e-12) and abs(raw.sum() - 1.0) <= 1e-8)
    try:
        make_weights(raw)
        accepted = True
    except ValidationError:
        accepted = False
    assert accepted == ok


@given(st.integers(1, 50))
def test_uniform_weights_valid(n):
    assert math.isclose(uniform_weights(n).w.sum(), 1.0, abs_tol=1e-12)


def test_convert_examples():
    s = ReturnsMatrix.simple([[0.1]])
    assert convert_returns(s, ReturnKind.LOG).values[0, 0] == pytest.approx(0.0953102, abs=1e-7)
    assert convert_returns(ReturnsMatrix.log([[0.0]]), ReturnKind.SIMPLE).values[0, 0] == 0.0
    with pytest.raises(DomainError):
        ReturnsMatrix.simple([[-1.0]])


def test_convert_keeps_labels():
    m = ReturnsMatrix.simple([[0.1, 0.2]], ("a", "b"))
    assert convert_returns(m, ReturnKind.LOG).asset_labels == ("a", "b")


@settings(max_examples=200)
@given(arrays(float, st.tuples(st.integers(1, 5), st.integers(1, 4)),
              elements=st.floats(-0.99, 5.0)))
def test_conversion_round_trip(values):
    m = ReturnsMatrix.simple(values)
    back = convert_returns(convert_returns(m, ReturnKind.LOG), ReturnKind.SIMPLE)
    np.testing.assert_allclose(back.values, values, rtol=0, atol=1e-12)


def test_returns_matrix_validation():
    with pytest.raises(ValidationError):
        ReturnsMatrix.log(np.zeros((0, 2)))
    with pytest.raises(ValidationError):
        ReturnsMatrix.log([[np.nan]])
    with pytest.raises(ValidationError):
        ReturnsMatrix.log([[0.1, 0.2]], ("only-one",))
    m = ReturnsMatrix.log([[0.1, 0.2], [0.0, 0.3]])
    assert (m.n_samples, m.n_assets) == (2, 2)
    with pytest.raises(ValueError):
        m.values[0, 0] = 1.0


def test_ball_spec_pairing_and_exponent():
    assert BallSpec(2, 0.1, "l2").dual_norm is Norm.L2
    assert BallSpec(2, 0.1, "l1").dual_norm is Norm.LINF
    assert BallSpec(2, 0.1, "linf").dual_norm is Norm.L1
    assert BallSpec(3, 0.1).q == pytest.approx(1.5)
    assert math.isinf(BallSpec(1, 0.1).q)
    assert BallSpec(2, 0.1).power_coefficient == pytest.approx(0.25)


def test_ball_spec_rejects_bad_parameters():
    with pytest.raises(ValidationError):
        BallSpec(2, -0.1)
    with pytest.raises(UnsupportedOrder):
        BallSpec(0.5, 0.1)


def test_extended_reals():
    assert ext_to_float(Unbounded.BELOW) == -math.inf
    assert ext_from_float(math.inf) is Unbounded.ABOVE
    assert ext_from_float(1.5) == 1.5
