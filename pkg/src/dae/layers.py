"""Layers with hand-written forward and backward passes.

All image tensors are ``N x H x W x C``.  Every parametric layer keeps its
tensors in ``params`` and the matching gradients in ``grads`` under the same
keys, so optimizers can treat layers uniformly.
"""
from __future__ import annotations

import math

import numpy as np

from .errors import DimensionError, StateError
from .tensor import Rng


def glorot_uniform(rng: Rng, shape, fan_in: int, fan_out: int, dtype=np.float32) -> np.ndarray:
    limit = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(shape, -limit, limit, dtype=dtype)


def same_padding(size: int, kernel: int, stride: int) -> tuple[int, int, int]:
    """Output size and (before, after) zero padding for "same" convolution.

    Output is ``ceil(size / stride)``; odd total padding puts the extra row
    at the end.
    """
    out = -(-size // stride)
    total = max((out - 1) * stride + kernel - size, 0)
    return out, total // 2, total - total // 2


def im2col(x: np.ndarray, kh: int, kw: int, stride: int) -> tuple[np.ndarray, tuple[int, int]]:
    """Unroll same-padded patches of ``x`` into rows.

    Returns ``cols`` of shape ``(N*Ho*Wo, kh*kw*C)`` with columns ordered
    (kernel row, kernel col, channel), matching ``kernel.reshape(-1, C_out)``
    for a ``kh x kw x C x C_out`` kernel.
    """
    n, h, w, c = x.shape
    ho, ph0, ph1 = same_padding(h, kh, stride)
    wo, pw0, pw1 = same_padding(w, kw, stride)
    xp = np.pad(x, ((0, 0), (ph0, ph1), (pw0, pw1), (0, 0))) if ph0 + ph1 + pw0 + pw1 else x
    cols = np.empty((n, ho, wo, kh, kw, c), dtype=x.dtype)
    for i in range(kh):
        for j in range(kw):
            cols[:, :, :, i, j, :] = xp[:, i:i + stride * ho:stride, j:j + stride * wo:stride, :]
    return cols.reshape(n * ho * wo, kh * kw * c), (ho, wo)


def col2im(cols: np.ndarray, x_shape: tuple, kh: int, kw: int, stride: int) -> np.ndarray:
    """Adjoint of :func:`im2col`: scatter-add patch rows back onto the image."""
    n, h, w, c = x_shape
    ho, ph0, ph1 = same_padding(h, kh, stride)
    wo, pw0, pw1 = same_padding(w, kw, stride)
    cols = cols.reshape(n, ho, wo, kh, kw, c)
    out = np.zeros((n, h + ph0 + ph1, w + pw0 + pw1, c), dtype=cols.dtype)
    for i in range(kh):
        for j in range(kw):
            out[:, i:i + stride * ho:stride, j:j + stride * wo:stride, :] += cols[:, :, :, i, j, :]
    return out[:, ph0:ph0 + h, pw0:pw0 + w, :]


def conv2d(x: np.ndarray, kernels: np.ndarray, stride: int = 1) -> np.ndarray:
    """Same-padded cross-correlation of ``x`` with ``kh x kw x C_in x C_out`` kernels."""
    kh, kw, cin, cout = kernels.shape
    if x.ndim != 4 or x.shape[3] != cin:
        raise DimensionError(f"conv2d expects N x H x W x {cin} input, got {x.shape}")
    cols, (ho, wo) = im2col(x, kh, kw, stride)
    return (cols @ kernels.reshape(-1, cout)).reshape(x.shape[0], ho, wo, cout)


def conv2d_transpose(y: np.ndarray, kernels: np.ndarray, stride: int, out_hw: tuple[int, int]) -> np.ndarray:
    """Adjoint of :func:`conv2d` with respect to its input.

    ``kernels`` has the conv layout ``kh x kw x C_img x C_y``; the result has
    shape ``N x out_hw x C_img``.
    """
    kh, kw, cimg, cy = kernels.shape
    cols = y.reshape(-1, cy) @ kernels.reshape(-1, cy).T
    return col2im(cols, (y.shape[0], out_hw[0], out_hw[1], cimg), kh, kw, stride)


class Layer:
    kind = "layer"

    def __init__(self):
        self.params: dict[str, np.ndarray] = {}
        self.grads: dict[str, np.ndarray] = {}
        self._cache = None

    @property
    def param_count(self) -> int:
        return sum(p.size for p in self.params.values())

    def output_shape(self, input_shape: tuple) -> tuple:
        return tuple(input_shape)

    def forward(self, x: np.ndarray, cache: bool = True) -> np.ndarray:
        raise NotImplementedError

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def astype(self, dtype) -> "Layer":
        for k in self.params:
            self.params[k] = self.params[k].astype(dtype)
        self.zero_grad()
        return self

    def zero_grad(self) -> None:
        self.grads = {k: np.zeros_like(v) for k, v in self.params.items()}

    def _take_cache(self):
        if self._cache is None:
            raise StateError(f"{self.kind}: backward called without a preceding forward")
        cached, self._cache = self._cache, None
        return cached

    def describe(self) -> str:
        return self.kind

    def __repr__(self):
        return f"{type(self).__name__}({self.describe()})"


class Dense(Layer):
    """Fully connected layer, ``y = x W^T + b`` with ``W`` of shape (out, in)."""

    kind = "dense"

    def __init__(self, in_features: int, out_features: int, rng: Rng | None = None, dtype=np.float32):
        super().__init__()
        self.in_features = in_features
        self.out_features = out_features
        if rng is None:
            weights = np.zeros((out_features, in_features), dtype=dtype)
        else:
            weights = glorot_uniform(rng, (out_features, in_features), in_features, out_features, dtype)
        self.params = {"weights": weights, "bias": np.zeros(out_features, dtype=dtype)}
        self.zero_grad()

    def output_shape(self, input_shape):
        if tuple(input_shape) != (self.in_features,):
            raise DimensionError(f"dense expects ({self.in_features},), got {tuple(input_shape)}")
        return (self.out_features,)

    def forward(self, x, cache=True):
        if x.ndim != 2 or x.shape[1] != self.in_features:
            raise DimensionError(f"dense expects batch x {self.in_features} input, got {x.shape}")
        if cache:
            self._cache = x
        return x @ self.params["weights"].T + self.params["bias"]

    def backward(self, grad_out):
        x = self._take_cache()
        self.grads["weights"] = grad_out.T @ x
        self.grads["bias"] = grad_out.sum(axis=0)
        return grad_out @ self.params["weights"]

    def describe(self):
        return f"{self.in_features} -> {self.out_features}"


class Conv2D(Layer):
    """Same-padded 2-D cross-correlation; kernels are ``kh x kw x C_in x C_out``."""

    kind = "conv2d"

    def __init__(self, in_channels: int, out_channels: int, kernel_size: int = 3, stride: int = 1,
                 rng: Rng | None = None, dtype=np.float32):
        super().__init__()
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.kernel_size = kernel_size
        self.stride = stride
        shape = (kernel_size, kernel_size, in_channels, out_channels)
        area = kernel_size * kernel_size
        if rng is None:
            kernels = np.zeros(shape, dtype=dtype)
        else:
            kernels = glorot_uniform(rng, shape, area * in_channels, area * out_channels, dtype)
        self.params = {"kernels": kernels, "bias": np.zeros(out_channels, dtype=dtype)}
        self.zero_grad()

    def output_shape(self, input_shape):
        h, w, c = _check_image_shape(input_shape, self.in_channels, self.kind)
        return (-(-h // self.stride), -(-w // self.stride), self.out_channels)

    def forward(self, x, cache=True):
        if x.ndim != 4 or x.shape[3] != self.in_channels:
            raise DimensionError(f"conv2d expects N x H x W x {self.in_channels} input, got {x.shape}")
        k = self.kernel_size
        cols, (ho, wo) = im2col(x, k, k, self.stride)
        out = cols @ self.params["kernels"].reshape(-1, self.out_channels) + self.params["bias"]
        if cache:
            self._cache = (cols, x.shape)
        return out.reshape(x.shape[0], ho, wo, self.out_channels)

    def backward(self, grad_out):
        cols, x_shape = self._take_cache()
        g = grad_out.reshape(-1, self.out_channels)
        kernels = self.params["kernels"]
        self.grads["kernels"] = (cols.T @ g).reshape(kernels.shape)
        self.grads["bias"] = g.sum(axis=0)
        k = self.kernel_size
        return col2im(g @ kernels.reshape(-1, self.out_channels).T, x_shape, k, k, self.stride)

    def describe(self):
        k = self.kernel_size
        return f"{self.in_channels} -> {self.out_channels}, {k}x{k}, stride {self.stride}, same"


class Conv2DTranspose(Layer):
    """Transposed convolution: the exact adjoint of a same-padded strided conv.

    Kernels are stored ``kh x kw x C_out x C_in``; read as conv kernels they
    map a ``C_out`` image down to ``C_in`` channels, and this layer applies
    the adjoint of that map, so spatial dims grow by ``stride``.
    """

    kind = "conv2d_transpose"

    def __init__(self, in_channels: int, out_channels: int, kernel_size: int = 3, stride: int = 2,
                 rng: Rng | None = None, dtype=np.float32):
        super().__init__()
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.kernel_size = kernel_size
        self.stride = stride
        shape = (kernel_size, kernel_size, out_channels, in_channels)
        area = kernel_size * kernel_size
        if rng is None:
            kernels = np.zeros(shape, dtype=dtype)
        else:
            kernels = glorot_uniform(rng, shape, area * in_channels, area * out_channels, dtype)
        self.params = {"kernels": kernels, "bias": np.zeros(out_channels, dtype=dtype)}
        self.zero_grad()

    def output_shape(self, input_shape):
        h, w, c = _check_image_shape(input_shape, self.in_channels, self.kind)
        return (h * self.stride, w * self.stride, self.out_channels)

    def forward(self, x, cache=True):
        if x.ndim != 4 or x.shape[3] != self.in_channels:
            raise DimensionError(
                f"conv2d_transpose expects N x H x W x {self.in_channels} input, got {x.shape}")
        out_hw = (x.shape[1] * self.stride, x.shape[2] * self.stride)
        out = conv2d_transpose(x, self.params["kernels"], self.stride, out_hw) + self.params["bias"]
        if cache:
            self._cache = x
        return out

    def backward(self, grad_out):
        x = self._take_cache()
        k = self.kernel_size
        kernels = self.params["kernels"]
        cols, _ = im2col(grad_out, k, k, self.stride)
        self.grads["kernels"] = (cols.T @ x.reshape(-1, self.in_channels)).reshape(kernels.shape)
        self.grads["bias"] = grad_out.sum(axis=(0, 1, 2))
        return (cols @ kernels.reshape(-1, self.in_channels)).reshape(x.shape)

    def describe(self):
        k = self.kernel_size
        return f"{self.in_channels} -> {self.out_channels}, {k}x{k}, stride {self.stride}, same"


class MaxPool2D(Layer):
    """Non-overlapping max pooling with "same" padding (ragged edges see -inf).

    Ties go to the first position in row-major window order.
    """

    kind = "maxpool2d"

    def __init__(self, pool_size: int = 2):
        super().__init__()
        self.pool_size = pool_size
        self.stride = pool_size

    def output_shape(self, input_shape):
        h, w, c = _check_image_shape(input_shape, None, self.kind)
        return (-(-h // self.pool_size), -(-w // self.pool_size), c)

    def forward(self, x, cache=True):
        if x.ndim != 4:
            raise DimensionError(f"maxpool2d expects N x H x W x C input, got {x.shape}")
        p = self.pool_size
        n, h, w, c = x.shape
        ho, wo = -(-h // p), -(-w // p)
        if ho * p != h or wo * p != w:
            x = np.pad(x, ((0, 0), (0, ho * p - h), (0, wo * p - w), (0, 0)), constant_values=-np.inf)
        windows = x.reshape(n, ho, p, wo, p, c).transpose(0, 1, 3, 5, 2, 4).reshape(n, ho, wo, c, p * p)
        argmax = windows.argmax(axis=-1)
        out = np.take_along_axis(windows, argmax[..., None], axis=-1)[..., 0]
        if cache:
            self._cache = (argmax, (n, h, w, c))
        return out

    def backward(self, grad_out):
        argmax, (n, h, w, c) = self._take_cache()
        p = self.pool_size
        ho, wo = argmax.shape[1:3]
        routed = np.zeros((n, ho, wo, c, p * p), dtype=grad_out.dtype)
        np.put_along_axis(routed, argmax[..., None], grad_out[..., None], axis=-1)
        full = routed.reshape(n, ho, wo, c, p, p).transpose(0, 1, 4, 2, 5, 3).reshape(n, ho * p, wo * p, c)
        return np.ascontiguousarray(full[:, :h, :w, :])

    def describe(self):
        p = self.pool_size
        return f"{p}x{p}, stride {self.stride}, same"


class ReLU(Layer):
    kind = "relu"

    def forward(self, x, cache=True):
        if cache:
            self._cache = x > 0
        return np.maximum(x, 0)

    def backward(self, grad_out):
        mask = self._take_cache()
        return grad_out * mask


class Sigmoid(Layer):
    kind = "sigmoid"

    def forward(self, x, cache=True):
        y = np.empty_like(x)
        pos = x >= 0
        y[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
        ex = np.exp(x[~pos])
        y[~pos] = ex / (1.0 + ex)
        # keep strictly inside (0, 1) even where the dtype saturates
        info = np.finfo(x.dtype)
        np.clip(y, info.tiny, 1.0 - info.epsneg, out=y)
        if cache:
            self._cache = y
        return y

    def backward(self, grad_out):
        y = self._take_cache()
        return grad_out * y * (1.0 - y)


class Flatten(Layer):
    kind = "flatten"

    def output_shape(self, input_shape):
        return (int(np.prod(input_shape)),)

    def forward(self, x, cache=True):
        if cache:
            self._cache = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, grad_out):
        shape = self._take_cache()
        return grad_out.reshape(shape)


class Reshape(Layer):
    kind = "reshape"

    def __init__(self, target_shape: tuple):
        super().__init__()
        self.target_shape = tuple(target_shape)

    def output_shape(self, input_shape):
        if int(np.prod(input_shape)) != int(np.prod(self.target_shape)):
            raise DimensionError(f"cannot reshape {tuple(input_shape)} to {self.target_shape}")
        return self.target_shape

    def forward(self, x, cache=True):
        if x[0].size != int(np.prod(self.target_shape)):
            raise DimensionError(f"cannot reshape {x.shape[1:]} to {self.target_shape}")
        if cache:
            self._cache = x.shape
        return x.reshape((x.shape[0],) + self.target_shape)

    def backward(self, grad_out):
        shape = self._take_cache()
        return grad_out.reshape(shape)

    def describe(self):
        return "x".join(str(d) for d in self.target_shape)


def _check_image_shape(shape, channels, kind):
    if len(shape) != 3:
        raise DimensionError(f"{kind} expects H x W x C input, got {tuple(shape)}")
    if channels is not None and shape[2] != channels:
        raise DimensionError(f"{kind} expects {channels} input channels, got {shape[2]}")
    return shape
