"""MNIST IDX loading, Gaussian corruption and shuffled batching."""
from __future__ import annotations

import gzip
import os
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

import numpy as np

from .errors import CorruptionError, FormatError, UnsupportedShapeError
from .tensor import Rng, gaussian_sample

IDX_IMAGES_MAGIC = 2051
IDX_LABELS_MAGIC = 2049
IMAGE_SIDE = 28

SPLIT_FILES = {
    "train": "train-images-idx3-ubyte",
    "test": "t10k-images-idx3-ubyte",
}

# sub-stream keys for Rng.derive
NOISE_STREAM = 1
SHUFFLE_STREAM = 2
EVAL_NOISE_STREAM = 3


@dataclass(frozen=True)
class Dataset:
    images: np.ndarray  # N x 28 x 28 x 1, float32 in [0, 1]
    split: str = "train"

    def __len__(self):
        return len(self.images)

    def subset(self, limit: int | None) -> "Dataset":
        if limit is None or limit >= len(self):
            return self
        return Dataset(self.images[:limit], self.split)


@dataclass(frozen=True)
class NoisyPair:
    clean: np.ndarray
    noisy: np.ndarray


def read_idx_images(data: bytes) -> np.ndarray:
    """Parse an IDX3 image file (raw or gzip) into an ``N x rows x cols`` uint8 array."""
    if data[:2] == b"\x1f\x8b":
        try:
            data = gzip.decompress(data)
        except (OSError, EOFError) as exc:
            raise CorruptionError(f"bad gzip stream: {exc}") from None
    if len(data) < 4:
        raise CorruptionError("IDX file shorter than its magic number")
    (magic,) = struct.unpack(">i", data[:4])
    if magic != IDX_IMAGES_MAGIC:
        kind = " (a label file)" if magic == IDX_LABELS_MAGIC else ""
        raise FormatError(f"expected IDX image magic {IDX_IMAGES_MAGIC}, found {magic}{kind}")
    if len(data) < 16:
        raise CorruptionError("IDX header truncated")
    count, rows, cols = struct.unpack(">iii", data[4:16])
    if (rows, cols) != (IMAGE_SIDE, IMAGE_SIDE):
        raise UnsupportedShapeError(f"images are {rows}x{cols}, only 28x28 is supported")
    expected = count * rows * cols
    payload = len(data) - 16
    if count < 0 or payload != expected:
        raise CorruptionError(f"IDX header promises {count} images ({expected} bytes), payload has {payload}")
    return np.frombuffer(data, dtype=np.uint8, offset=16).reshape(count, rows, cols)


def load_idx_images(path, split: str = "train") -> Dataset:
    """Load an IDX3 image file, normalised to float32 ``N x 28 x 28 x 1`` in [0, 1]."""
    raw = read_idx_images(Path(path).read_bytes())
    images = (raw.astype(np.float32) / np.float32(255.0))[..., None]
    return Dataset(images, split)


def write_idx_images(path, images: np.ndarray) -> None:
    """Write ``N x rows x cols`` uint8 images as an uncompressed IDX3 file."""
    images = np.asarray(images, dtype=np.uint8)
    n, rows, cols = images.shape
    with open(path, "wb") as f:
        f.write(struct.pack(">iiii", IDX_IMAGES_MAGIC, n, rows, cols))
        f.write(images.tobytes())


def find_split(data_dir, split: str) -> Path:
    """Locate the IDX file for ``split`` in ``data_dir``, plain or ``.gz``."""
    base = Path(data_dir) / SPLIT_FILES[split]
    for candidate in (base, base.with_name(base.name + ".gz"),
                      base.with_name(base.name.replace("-idx3", ".idx3"))):
        if candidate.is_file():
            return candidate
    raise FileNotFoundError(f"no {split} images ({SPLIT_FILES[split]}[.gz]) in {data_dir}")


def resolve_data_dir(data_dir=None) -> Path:
    data_dir = data_dir or os.environ.get("MNIST_DIR")
    if not data_dir:
        raise FileNotFoundError("no data directory given (use --data-dir or set MNIST_DIR)")
    return Path(data_dir)


def load_mnist(data_dir=None, split: str = "train", limit: int | None = None) -> Dataset:
    path = find_split(resolve_data_dir(data_dir), split)
    return load_idx_images(path, split).subset(limit)


def add_gaussian_noise(images: np.ndarray, noise_factor: float, rng: Rng) -> NoisyPair:
    """Corrupt ``images`` with ``noise_factor * N(0, 1)`` noise, clipped to [0, 1]."""
    if noise_factor < 0:
        raise ValueError(f"noise_factor must be non-negative, got {noise_factor}")
    if noise_factor == 0:
        return NoisyPair(images, images.copy())
    noise = gaussian_sample(rng, images.shape, 0.0, noise_factor, dtype=images.dtype)
    noisy = images + noise
    np.clip(noisy, 0.0, 1.0, out=noisy)
    return NoisyPair(images, noisy)


def batch_iter(pair: NoisyPair, batch_size: int, rng: Rng | None) -> Iterator[tuple[np.ndarray, np.ndarray]]:
    """Yield ``(noisy, clean)`` batches covering every sample once.

    The order is a permutation drawn from ``rng``; pass ``None`` for the
    natural order.  The last batch may be short.
    """
    if batch_size < 1:
        raise ValueError(f"batch_size must be >= 1, got {batch_size}")
    n = len(pair.clean)
    if n == 0:
        raise ValueError("cannot batch an empty dataset")
    order = rng.permutation(n) if rng is not None else np.arange(n)
    for start in range(0, n, batch_size):
        idx = order[start:start + batch_size]
        yield pair.noisy[idx], pair.clean[idx]
