"""The two autoencoder architectures and their checkpoint format.

Checkpoint layout (all integers uint32 little-endian, floats float32 LE)::

    magic      8 bytes  b"DAECKPT\\0"
    version    u32      1
    arch       u32 length + ASCII ("dense" | "conv")
    input      3 x u32  H, W, C
    width      u32      latent units (dense) or filters (conv)
    n_layers   u32
    per layer: u32 length + ASCII kind, u32 n_params, then per parameter:
               u32 length + ASCII name, u32 ndim, ndim x u32 dims, raw data
"""
from __future__ import annotations

import io
import os
import struct

import numpy as np

from .errors import ArchMismatchError, CorruptionError, DimensionError, FormatError
from .layers import Conv2D, Conv2DTranspose, Dense, Flatten, Layer, MaxPool2D, ReLU, Reshape, Sigmoid
from .tensor import Rng

MNIST_SHAPE = (28, 28, 1)
CHECKPOINT_MAGIC = b"DAECKPT\x00"
CHECKPOINT_VERSION = 1
ARCHS = ("dense", "conv")


class Model:
    """An ordered stack of layers mapping images back onto their own shape.

    ``latent_index`` is the index of the last encoder layer; ``encode`` runs
    the stack up to and including it.
    """

    def __init__(self, layers: list[Layer], input_shape: tuple, arch: str, width: int,
                 latent_index: int):
        self.layers = list(layers)
        self.input_shape = tuple(input_shape)
        self.arch = arch
        self.width = width
        self.latent_index = latent_index
        self.shapes = self._infer_shapes()
        if self.shapes[-1] != self.input_shape:
            raise DimensionError(
                f"autoencoder output {self.shapes[-1]} does not match input {self.input_shape}")

    def _infer_shapes(self) -> list[tuple]:
        shapes = [self.input_shape]
        for i, layer in enumerate(self.layers):
            try:
                shapes.append(tuple(layer.output_shape(shapes[-1])))
            except DimensionError as exc:
                raise DimensionError(f"layer {i} ({layer.kind}): {exc}") from None
        return shapes

    @property
    def latent_shape(self) -> tuple:
        return self.shapes[self.latent_index + 1]

    @property
    def param_count(self) -> int:
        return sum(layer.param_count for layer in self.layers)

    @property
    def dtype(self):
        for layer in self.layers:
            for p in layer.params.values():
                return p.dtype
        return np.dtype(np.float32)

    def astype(self, dtype) -> "Model":
        for layer in self.layers:
            layer.astype(dtype)
        return self

    def _run(self, x: np.ndarray, stop: int, cache: bool) -> np.ndarray:
        if tuple(x.shape[1:]) != self.input_shape:
            raise DimensionError(f"layer 0 ({self.layers[0].kind}): expected batch x "
                                 f"{self.input_shape} input, got {x.shape}")
        for i, layer in enumerate(self.layers[:stop]):
            try:
                x = layer.forward(x, cache=cache)
            except DimensionError as exc:
                raise DimensionError(f"layer {i} ({layer.kind}): {exc}") from None
        return x

    def forward(self, x: np.ndarray, cache: bool = True) -> np.ndarray:
        return self._run(x, len(self.layers), cache)

    def predict(self, x: np.ndarray, batch_size: int = 256) -> np.ndarray:
        """Cache-free forward pass in chunks."""
        chunks = [self.forward(x[i:i + batch_size], cache=False) for i in range(0, len(x), batch_size)]
        return np.concatenate(chunks) if chunks else np.empty((0,) + self.input_shape, self.dtype)

    def encode(self, x: np.ndarray) -> np.ndarray:
        return self._run(x, self.latent_index + 1, cache=False)

    def backward(self, grad: np.ndarray) -> np.ndarray:
        for i in range(len(self.layers) - 1, -1, -1):
            layer = self.layers[i]
            try:
                grad = layer.backward(grad)
            except DimensionError as exc:
                raise DimensionError(f"layer {i} ({layer.kind}): {exc}") from None
        return grad

    def summary(self) -> list[dict]:
        rows = []
        for i, layer in enumerate(self.layers):
            rows.append({
                "index": i,
                "kind": layer.kind,
                "config": layer.describe(),
                "output_shape": self.shapes[i + 1],
                "params": layer.param_count,
                "latent": i == self.latent_index,
            })
        return rows

    def get_weights(self) -> list[dict[str, np.ndarray]]:
        return [{k: v.copy() for k, v in layer.params.items()} for layer in self.layers]

    def set_weights(self, weights: list[dict[str, np.ndarray]]) -> None:
        for layer, params in zip(self.layers, weights):
            for k, v in params.items():
                layer.params[k][...] = v


def build_dense_autoencoder(rng: Rng, input_shape: tuple = MNIST_SHAPE, latent_units: int = 64,
                            dtype=np.float32) -> Model:
    """Flatten -> Dense(latent) -> ReLU -> Dense(pixels) -> Sigmoid -> Reshape."""
    pixels = int(np.prod(input_shape))
    layers = [
        Flatten(),
        Dense(pixels, latent_units, rng, dtype),
        ReLU(),
        Dense(latent_units, pixels, rng, dtype),
        Sigmoid(),
        Reshape(input_shape),
    ]
    return Model(layers, input_shape, "dense", latent_units, latent_index=2)


def build_conv_autoencoder(rng: Rng, input_shape: tuple = MNIST_SHAPE, filters: int = 32,
                           dtype=np.float32) -> Model:
    """Two conv+pool encoder stages, two stride-2 transposed convs, conv to one channel."""
    channels = input_shape[2]
    layers = [
        Conv2D(channels, filters, 3, 1, rng, dtype),
        ReLU(),
        MaxPool2D(2),
        Conv2D(filters, filters, 3, 1, rng, dtype),
        ReLU(),
        MaxPool2D(2),
        Conv2DTranspose(filters, filters, 3, 2, rng, dtype),
        ReLU(),
        Conv2DTranspose(filters, filters, 3, 2, rng, dtype),
        ReLU(),
        Conv2D(filters, channels, 3, 1, rng, dtype),
        Sigmoid(),
    ]
    return Model(layers, input_shape, "conv", filters, latent_index=5)


BUILDERS = {"dense": build_dense_autoencoder, "conv": build_conv_autoencoder}


def build_model(arch: str, rng: Rng, input_shape: tuple = MNIST_SHAPE, width: int | None = None,
                dtype=np.float32) -> Model:
    if arch not in BUILDERS:
        raise ValueError(f"unknown architecture {arch!r}; choose from {list(BUILDERS)}")
    kwargs = {}
    if width is not None:
        kwargs["latent_units" if arch == "dense" else "filters"] = width
    return BUILDERS[arch](rng, input_shape, dtype=dtype, **kwargs)


def _pack_str(buf, s: str) -> None:
    raw = s.encode("ascii")
    buf.write(struct.pack("<I", len(raw)))
    buf.write(raw)


def checkpoint_bytes(model: Model) -> bytes:
    buf = io.BytesIO()
    buf.write(CHECKPOINT_MAGIC)
    buf.write(struct.pack("<I", CHECKPOINT_VERSION))
    _pack_str(buf, model.arch)
    buf.write(struct.pack("<3I", *model.input_shape))
    buf.write(struct.pack("<I", model.width))
    buf.write(struct.pack("<I", len(model.layers)))
    for layer in model.layers:
        _pack_str(buf, layer.kind)
        buf.write(struct.pack("<I", len(layer.params)))
        for name, p in layer.params.items():
            _pack_str(buf, name)
            buf.write(struct.pack("<I", p.ndim))
            buf.write(struct.pack(f"<{p.ndim}I", *p.shape))
            buf.write(np.ascontiguousarray(p, dtype="<f4").tobytes())
    return buf.getvalue()


def save_checkpoint(model: Model, path) -> None:
    data = checkpoint_bytes(model)
    tmp = f"{os.fspath(path)}.tmp"
    with open(tmp, "wb") as f:
        f.write(data)
    os.replace(tmp, path)


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if n < 0 or self.pos + n > len(self.data):
            raise CorruptionError(f"checkpoint truncated at byte {self.pos} (wanted {n} more)")
        chunk = self.data[self.pos:self.pos + n]
        self.pos += n
        return chunk

    def u32(self, count: int = 1):
        vals = struct.unpack(f"<{count}I", self.take(4 * count))
        return vals[0] if count == 1 else vals

    def string(self) -> str:
        n = self.u32()
        if n > 256:
            raise CorruptionError(f"implausible string length {n} at byte {self.pos}")
        try:
            return self.take(n).decode("ascii")
        except UnicodeDecodeError:
            raise CorruptionError("non-ASCII identifier in checkpoint") from None


def checkpoint_from_bytes(data: bytes, expected_arch: str | None = None) -> Model:
    r = _Reader(data)
    if len(data) < len(CHECKPOINT_MAGIC) or r.take(len(CHECKPOINT_MAGIC)) != CHECKPOINT_MAGIC:
        raise FormatError("not a checkpoint file (bad magic)")
    version = r.u32()
    if version != CHECKPOINT_VERSION:
        raise FormatError(f"unsupported checkpoint version {version}")
    arch = r.string()
    if arch not in BUILDERS:
        raise FormatError(f"unknown architecture tag {arch!r}")
    if expected_arch is not None and arch != expected_arch:
        raise ArchMismatchError(f"checkpoint holds a {arch!r} model, expected {expected_arch!r}")
    input_shape = r.u32(3)
    width = r.u32()
    try:
        model = build_model(arch, Rng(0), tuple(input_shape), width)
    except (DimensionError, ValueError) as exc:
        raise CorruptionError(f"inconsistent checkpoint header: {exc}") from None
    n_layers = r.u32()
    if n_layers != len(model.layers):
        raise CorruptionError(f"{arch} model has {len(model.layers)} layers, checkpoint has {n_layers}")
    weights = []
    for i, layer in enumerate(model.layers):
        kind = r.string()
        if kind != layer.kind:
            raise CorruptionError(f"layer {i}: expected {layer.kind}, found {kind}")
        n_params = r.u32()
        if n_params != len(layer.params):
            raise CorruptionError(f"layer {i}: expected {len(layer.params)} parameters, found {n_params}")
        params = {}
        for _ in range(n_params):
            name = r.string()
            if name not in layer.params:
                raise CorruptionError(f"layer {i}: unexpected parameter {name!r}")
            ndim = r.u32()
            shape = tuple(r.u32(ndim)) if ndim > 1 else ((r.u32(),) if ndim == 1 else ())
            expected = layer.params[name].shape
            if shape != expected:
                raise CorruptionError(f"layer {i} {name}: shape {shape} does not match {expected}")
            count = int(np.prod(shape))
            params[name] = np.frombuffer(r.take(4 * count), dtype="<f4").reshape(shape)
        weights.append(params)
    if r.pos != len(data):
        raise CorruptionError(f"{len(data) - r.pos} trailing bytes after checkpoint body")
    model.set_weights(weights)
    return model


def load_checkpoint(path, expected_arch: str | None = None) -> Model:
    with open(path, "rb") as f:
        data = f.read()
    return checkpoint_from_bytes(data, expected_arch)
