"""Reconstruction losses, mean-reduced over every element of the batch."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tensor import check_same_shape

BCE_EPSILON = 1e-7


@dataclass(frozen=True)
class LossValue:
    value: float
    grad: np.ndarray


def mse(pred: np.ndarray, target: np.ndarray) -> LossValue:
    check_same_shape(pred, target, "prediction and target")
    diff = pred - target
    n = diff.size
    return LossValue(float(np.mean(np.square(diff, dtype=np.float64))), (2.0 / n) * diff)


def bce(pred: np.ndarray, target: np.ndarray, eps: float = BCE_EPSILON) -> LossValue:
    """Binary cross-entropy in nats.

    Predictions are clamped to ``[eps, 1 - eps]``; the gradient is taken at
    the clamped value.
    """
    check_same_shape(pred, target, "prediction and target")
    p = np.clip(pred, eps, 1.0 - eps)
    n = p.size
    p64 = p.astype(np.float64, copy=False)
    t64 = target.astype(np.float64, copy=False)
    value = -np.mean(t64 * np.log(p64) + (1.0 - t64) * np.log1p(-p64))
    grad = (p - target) / (p * (1.0 - p) * n)
    return LossValue(max(float(value), 0.0), grad.astype(pred.dtype, copy=False))


LOSSES = {"bce": bce, "mse": mse}


def get_loss(name: str):
    try:
        return LOSSES[name]
    except KeyError:
        raise ValueError(f"unknown loss {name!r}; choose from {sorted(LOSSES)}") from None
