"""Binary PGM (P5, maxval 255) reading and writing."""
from __future__ import annotations

import re

import numpy as np

from .errors import CorruptionError, FormatError

_HEADER = re.compile(rb"P5(?:\s|#[^\n]*\n)+(\d+)(?:\s|#[^\n]*\n)+(\d+)(?:\s|#[^\n]*\n)+(\d+)\s")


def to_bytes(pixels: np.ndarray) -> np.ndarray:
    """Map [0, 1] floats to 8-bit samples with ``round(p * 255)``."""
    return np.rint(np.clip(pixels, 0.0, 1.0) * 255.0).astype(np.uint8)


def encode_pgm(image: np.ndarray) -> bytes:
    image = np.asarray(image)
    if image.ndim != 2:
        raise ValueError(f"PGM needs a 2-D image, got shape {image.shape}")
    if image.dtype != np.uint8:
        image = to_bytes(image)
    h, w = image.shape
    return b"P5\n%d %d\n255\n" % (w, h) + image.tobytes()


def decode_pgm(data: bytes) -> np.ndarray:
    """Parse P5 bytes into an ``H x W`` uint8 array."""
    m = _HEADER.match(data)
    if m is None:
        raise FormatError("not a binary PGM (P5) file")
    w, h, maxval = (int(g) for g in m.groups())
    if maxval != 255:
        raise FormatError(f"only maxval 255 is supported, got {maxval}")
    body = data[m.end():]
    if len(body) != w * h:
        raise CorruptionError(f"PGM body has {len(body)} bytes, expected {w * h}")
    return np.frombuffer(body, dtype=np.uint8).reshape(h, w)


def write_pgm(path, image: np.ndarray) -> None:
    with open(path, "wb") as f:
        f.write(encode_pgm(image))


def read_pgm(path) -> np.ndarray:
    with open(path, "rb") as f:
        return decode_pgm(f.read())


def triptych(clean: np.ndarray, noisy: np.ndarray, denoised: np.ndarray, separator: int = 0) -> np.ndarray:
    """Lay out three ``H x W`` images side by side as one uint8 panel.

    ``separator`` inserts that many white columns between panels.
    """
    panels = [to_bytes(np.asarray(p).reshape(np.shape(p)[:2])) for p in (clean, noisy, denoised)]
    h = panels[0].shape[0]
    gap = np.full((h, separator), 255, dtype=np.uint8)
    parts = [panels[0], gap, panels[1], gap, panels[2]] if separator else panels
    return np.concatenate(parts, axis=1)
