import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from dae.errors import DimensionError
from dae.losses import bce, get_loss, mse
from oracles import max_rel_error, numerical_grad


def test_mse_perfect():
    x = np.array([0.1, 0.7])
    assert mse(x, x).value == 0.0


def test_mse_hand_value():
    assert mse(np.array([0.5, 0.5]), np.array([1.0, 0.0])).value == 0.25


def test_mse_homogeneous_degree_two(rs):
    t = rs.random(20)
    p = rs.random(20)
    assert mse(t + 2 * (p - t), t).value == pytest.approx(4 * mse(p, t).value, rel=1e-12)


def test_bce_max_entropy_point():
    half = np.full((3, 4), 0.5)
    assert bce(half, half).value == pytest.approx(math.log(2), abs=1e-12)
    assert round(bce(half, half).value, 4) == 0.6931


def test_bce_scalar():
    assert bce(np.array([0.8]), np.array([1.0])).value == pytest.approx(-math.log(0.8), abs=1e-12)
    assert round(-math.log(0.8), 4) == 0.2231


def test_bce_self_consistency_is_binary_entropy():
    for t in (0.1, 0.3, 0.5, 0.9):
        arr = np.full(5, t)
        entropy = -(t * math.log(t) + (1 - t) * math.log(1 - t))
        assert bce(arr, arr).value == pytest.approx(entropy, rel=1e-12)


def test_bce_clamps_saturated_predictions():
    lv = bce(np.array([0.0, 1.0]), np.array([1.0, 0.0]))
    assert math.isfinite(lv.value) and np.all(np.isfinite(lv.grad))
    assert lv.value == pytest.approx(-math.log(1e-7), rel=1e-6)


@pytest.mark.parametrize("fn", [mse, bce])
def test_shape_mismatch(fn):
    with pytest.raises(DimensionError):
        fn(np.zeros(3), np.zeros(4))


@pytest.mark.parametrize("fn", [mse, bce])
def test_gradient_finite_difference(fn, rs):
    p = rs.uniform(0.1, 0.9, (4, 6))
    t = rs.uniform(0.0, 1.0, (4, 6))
    lv = fn(p, t)
    assert lv.grad.shape == p.shape
    numeric = numerical_grad(lambda: fn(p, t).value, p)
    assert max_rel_error(lv.grad, numeric) < 1e-6


def test_unknown_loss():
    with pytest.raises(ValueError):
        get_loss("hinge")


unit = st.floats(0.0, 1.0)


@settings(max_examples=100, deadline=None)
@given(arrays(np.float64, 8, elements=unit), arrays(np.float64, 8, elements=unit))
def test_losses_non_negative(p, t):
    assert bce(p, t).value >= 0.0
    m = mse(p, t).value
    assert m >= 0.0
    assert (m == 0.0) == bool(np.array_equal(p, t))
