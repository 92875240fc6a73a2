"""Array kernels and the seeded random source.

Tensors are plain :class:`numpy.ndarray` objects in row-major order with
channels-last image layout (``N x H x W x C``).  Production paths run in
float32; gradient checks promote to float64.  The helpers here add the shape
checking and finiteness guarantees the rest of the package relies on.
"""
from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .errors import DimensionError

DEFAULT_DTYPE = np.float32


def as_tensor(x, dtype=None) -> np.ndarray:
    """Return ``x`` as a C-contiguous float array (float32 unless told otherwise)."""
    arr = np.asarray(x)
    if dtype is None:
        dtype = arr.dtype if arr.dtype in (np.float32, np.float64) else DEFAULT_DTYPE
    return np.ascontiguousarray(arr, dtype=dtype)


def check_same_shape(a: np.ndarray, b: np.ndarray, what: str = "operands") -> None:
    if a.shape != b.shape:
        raise DimensionError(f"{what} have mismatched shapes {a.shape} and {b.shape}")


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Matrix product of ``a`` (m x k) and ``b`` (k x n)."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise DimensionError(f"cannot multiply shapes {a.shape} and {b.shape}")
    return a @ b


def map_(x: np.ndarray, fn: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    out = np.asarray(fn(np.asarray(x)))
    if out.shape != np.shape(x):
        raise DimensionError(f"map changed shape {np.shape(x)} -> {out.shape}")
    return out


def zip_(a: np.ndarray, b: np.ndarray, fn: Callable[[np.ndarray, np.ndarray], np.ndarray]) -> np.ndarray:
    a = np.asarray(a)
    b = np.asarray(b)
    check_same_shape(a, b)
    return np.asarray(fn(a, b))


def reduce_sum(x: np.ndarray, axis=None) -> np.ndarray:
    return np.sum(x, axis=axis)


def reduce_mean(x: np.ndarray, axis=None) -> np.ndarray:
    return np.mean(x, axis=axis)


def reshape(x: np.ndarray, new_shape: Sequence[int]) -> np.ndarray:
    """Reinterpret ``x`` with ``new_shape``; element order is unchanged."""
    x = np.asarray(x)
    new_shape = tuple(int(d) for d in new_shape)
    if int(np.prod(new_shape, dtype=np.int64)) != x.size:
        raise DimensionError(f"cannot reshape {x.shape} ({x.size} elements) to {new_shape}")
    return x.reshape(new_shape)


def _as_shape(shape) -> tuple:
    if isinstance(shape, (int, np.integer)):
        return (int(shape),)
    return tuple(int(d) for d in shape)


class Rng:
    """Explicit-state random source.

    Wraps the counter-based Philox bit generator.  Uniforms and normals are
    derived from the raw 64-bit stream here rather than through numpy's
    distribution methods, so the sequence for a given seed is pinned.

    ``derive`` returns an independent child stream keyed on extra integers,
    used for per-epoch shuffles and noise draws.
    """

    def __init__(self, seed: int = 0, _spawn_key: tuple = ()):
        if seed < 0:
            raise ValueError("seed must be non-negative")
        self.seed = int(seed)
        self._spawn_key = tuple(int(k) for k in _spawn_key)
        ss = np.random.SeedSequence(self.seed, spawn_key=self._spawn_key)
        self._bitgen = np.random.Philox(ss)

    def derive(self, *keys: int) -> "Rng":
        return Rng(self.seed, self._spawn_key + tuple(keys))

    def raw(self, n: int) -> np.ndarray:
        return self._bitgen.random_raw(int(n))

    def uniform(self, shape, low: float = 0.0, high: float = 1.0, dtype=np.float64) -> np.ndarray:
        """Samples from ``[low, high)`` with 53-bit resolution."""
        shape = _as_shape(shape)
        n = int(np.prod(shape, dtype=np.int64))
        u = (self.raw(n) >> np.uint64(11)).astype(np.float64) * (1.0 / 9007199254740992.0)
        return (low + (high - low) * u).reshape(shape).astype(dtype, copy=False)

    def permutation(self, n: int) -> np.ndarray:
        return np.argsort(self.raw(n), kind="stable")


def gaussian_sample(rng: Rng, shape, mean: float = 0.0, std: float = 1.0, dtype=np.float64) -> np.ndarray:
    """I.i.d. normal samples via the Box-Muller transform."""
    if std < 0:
        raise ValueError(f"std must be non-negative, got {std}")
    shape = _as_shape(shape)
    n = int(np.prod(shape, dtype=np.int64))
    half = (n + 1) // 2
    u1 = 1.0 - rng.uniform((half,))  # (0, 1], keeps log finite
    u2 = rng.uniform((half,))
    radius = np.sqrt(-2.0 * np.log(u1))
    theta = 2.0 * np.pi * u2
    z = np.concatenate([radius * np.cos(theta), radius * np.sin(theta)])[:n]
    return (mean + std * z).reshape(shape).astype(dtype, copy=False)
