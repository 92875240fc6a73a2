import hashlib
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from dae.errors import DimensionError
from dae.tensor import Rng, gaussian_sample, map_, matmul, reduce_mean, reshape, zip_
from oracles import matmul_loops


def test_matmul_identity():
    b = np.array([[5.0, 6.0], [7.0, 8.0]])
    np.testing.assert_array_equal(matmul(np.eye(2), b), b)


def test_matmul_against_loops():
    a = [[1.0, 2.0], [3.0, 4.0]]
    b = [[1.0], [1.0]]
    expected = matmul_loops(a, b)
    assert expected == [[3.0], [7.0]]
    np.testing.assert_array_equal(matmul(np.array(a), np.array(b)), expected)


def test_matmul_zero():
    out = matmul(np.zeros((3, 4)), np.arange(8.0).reshape(4, 2))
    assert out.shape == (3, 2)
    assert not out.any()


def test_matmul_shape_error_names_shapes():
    with pytest.raises(DimensionError, match=r"\(2, 3\).*\(2, 3\)"):
        matmul(np.zeros((2, 3)), np.zeros((2, 3)))


@pytest.mark.parametrize("dtype,tol", [(np.float32, 1e-5), (np.float64, 1e-10)])
def test_matmul_associative(dtype, tol):
    r = np.random.default_rng(0)
    for _ in range(20):
        a, b, c = (r.uniform(-1, 1, s).astype(dtype) for s in [(4, 5), (5, 3), (3, 6)])
        left = matmul(matmul(a, b), c)
        right = matmul(a, matmul(b, c))
        assert np.max(np.abs(left - right)) <= tol * max(1.0, np.max(np.abs(left)))


def test_map_zip_reduce():
    x = np.array([1.0, 2.0])
    np.testing.assert_array_equal(map_(x, lambda t: t), x)
    np.testing.assert_array_equal(zip_(x, np.array([3.0, 4.0]), np.add), [4.0, 6.0])
    assert reduce_mean(np.array([1.0, 2.0, 3.0, 4.0])) == 2.5
    with pytest.raises(DimensionError):
        zip_(x, np.zeros(3), np.add)


def test_reshape_round_trip_and_order():
    x = np.random.default_rng(1).random((28, 28, 1)).astype(np.float32)
    back = reshape(reshape(x, (784,)), (28, 28, 1))
    assert back.tobytes() == x.tobytes()
    np.testing.assert_array_equal(reshape(np.array([[1, 2], [3, 4]]), (4,)), [1, 2, 3, 4])
    np.testing.assert_array_equal(reshape(x, x.shape), x)
    with pytest.raises(DimensionError):
        reshape(x, (783,))


def test_gaussian_degenerate():
    out = gaussian_sample(Rng(3), (5, 4), mean=1.5, std=0.0)
    assert np.all(out == 1.5)


def test_gaussian_negative_std():
    with pytest.raises(ValueError):
        gaussian_sample(Rng(0), (3,), std=-1.0)


def test_gaussian_deterministic():
    a = gaussian_sample(Rng(42), (1001,))
    b = gaussian_sample(Rng(42), (1001,))
    assert a.tobytes() == b.tobytes()
    assert a.tobytes() != gaussian_sample(Rng(43), (1001,)).tobytes()


def test_gaussian_moments():
    z = gaussian_sample(Rng(7), (1_000_000,), 0.0, 0.5)
    assert abs(z.mean()) < 0.005
    assert abs(z.std() - 0.5) < 0.005


def test_gaussian_reproducible_across_processes():
    code = ("import hashlib; from dae.tensor import Rng, gaussian_sample;"
            "print(hashlib.sha256(gaussian_sample(Rng(42), (4096,)).tobytes()).hexdigest())")
    here = hashlib.sha256(gaussian_sample(Rng(42), (4096,)).tobytes()).hexdigest()
    outs = {subprocess.run([sys.executable, "-c", code], capture_output=True, text=True, check=True).stdout.strip()
            for _ in range(2)}
    assert outs == {here}


def test_derived_streams_are_independent():
    root = Rng(5)
    a = root.derive(1, 0).uniform(100)
    b = root.derive(1, 1).uniform(100)
    assert not np.array_equal(a, b)
    np.testing.assert_array_equal(a, Rng(5).derive(1, 0).uniform(100))


def test_uniform_range_and_permutation():
    u = Rng(0).uniform((10_000,))
    assert u.min() >= 0.0 and u.max() < 1.0
    p = Rng(0).permutation(50)
    assert sorted(p.tolist()) == list(range(50))


finite = st.floats(-1e3, 1e3, allow_nan=False, width=32)


@settings(max_examples=50, deadline=None)
@given(arrays(np.float32, (3, 4), elements=finite), arrays(np.float32, (4, 2), elements=finite))
def test_matmul_stays_finite(a, b):
    assert np.all(np.isfinite(matmul(a, b)))


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, (6,), elements=st.floats(-1e6, 1e6)))
def test_reshape_preserves_values(x):
    assert reshape(reshape(x, (2, 3)), (6,)).tobytes() == x.tobytes()
