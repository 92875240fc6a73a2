"""Minibatch training loop and evaluation."""
from __future__ import annotations

import logging
import math
import time
from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np

from .data import EVAL_NOISE_STREAM, NOISE_STREAM, SHUFFLE_STREAM, NoisyPair, add_gaussian_noise, batch_iter
from .errors import DimensionError, NumericalError
from .losses import get_loss
from .model import Model
from .optim import Adam
from .tensor import Rng

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 20
    batch_size: int = 128
    loss: str = "bce"
    noise_factor: float = 0.5
    seed: int = 0
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-7
    freeze_noise: bool = False

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.noise_factor < 0:
            raise ValueError(f"noise_factor must be non-negative, got {self.noise_factor}")
        get_loss(self.loss)


@dataclass(frozen=True)
class EpochReport:
    epoch: int
    train_loss: float
    val_loss: float | None
    seconds: float

    def as_dict(self):
        return asdict(self)

    def line(self) -> str:
        val = "n/a" if self.val_loss is None else f"{self.val_loss:.4f}"
        return (f"epoch {self.epoch} train_loss {self.train_loss:.4f} "
                f"val_loss {val} seconds {self.seconds:.1f}")


def validation_pair(images: np.ndarray, noise_factor: float, seed: int) -> NoisyPair:
    """Noisy copy of a held-out set; fixed for a given seed so scores compare across runs."""
    return add_gaussian_noise(images, noise_factor, Rng(seed).derive(EVAL_NOISE_STREAM))


def evaluate(model: Model, pair: NoisyPair, loss: str = "bce", batch_size: int = 256) -> float:
    """Mean loss of ``model`` reconstructing ``pair.clean`` from ``pair.noisy``."""
    n = len(pair.clean)
    if n == 0:
        raise ValueError("cannot evaluate on an empty set")
    loss_fn = get_loss(loss)
    total = 0.0
    for noisy, clean in batch_iter(pair, batch_size, None):
        total += loss_fn(model.forward(noisy, cache=False), clean).value * len(clean)
    return total / n


def fit(model: Model, train_images: np.ndarray, val_images: np.ndarray | None, config: TrainConfig,
        callback: Callable[[EpochReport], None] | None = None) -> list[EpochReport]:
    """Train ``model`` to map noisy copies of ``train_images`` back to the clean images.

    Noise is redrawn every epoch unless ``config.freeze_noise``.  The reported
    train loss is the sample-weighted mean over the epoch's batches.
    """
    if tuple(train_images.shape[1:]) != model.input_shape:
        raise DimensionError(f"model expects {model.input_shape} images, got {train_images.shape[1:]}")
    if len(train_images) == 0:
        raise ValueError("cannot train on an empty dataset")
    loss_fn = get_loss(config.loss)
    optimizer = Adam(config.learning_rate, config.beta1, config.beta2, config.epsilon)
    root = Rng(config.seed)
    val_pair = None
    if val_images is not None:
        val_pair = validation_pair(val_images, config.noise_factor, config.seed)

    reports = []
    train_pair = None
    for epoch in range(1, config.epochs + 1):
        start = time.perf_counter()
        if train_pair is None or not config.freeze_noise:
            noise_epoch = 0 if config.freeze_noise else epoch
            train_pair = add_gaussian_noise(train_images, config.noise_factor, root.derive(NOISE_STREAM, noise_epoch))
        total, seen = 0.0, 0
        batches = batch_iter(train_pair, config.batch_size, root.derive(SHUFFLE_STREAM, epoch))
        for b, (noisy, clean) in enumerate(batches):
            out = model.forward(noisy)
            lv = loss_fn(out, clean)
            if not math.isfinite(lv.value):
                raise NumericalError(f"non-finite loss at epoch {epoch}, batch {b}")
            model.backward(lv.grad)
            optimizer.step(model.layers)
            total += lv.value * len(clean)
            seen += len(clean)
        val_loss = evaluate(model, val_pair, config.loss) if val_pair is not None else None
        report = EpochReport(epoch, total / seen, val_loss, time.perf_counter() - start)
        logger.info(report.line())
        reports.append(report)
        if callback is not None:
            callback(report)
    return reports
