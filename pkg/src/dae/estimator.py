"""scikit-learn compatible wrapper around the models and training loop."""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .model import MNIST_SHAPE, build_model, load_checkpoint, save_checkpoint
from .tensor import Rng
from .trainer import TrainConfig, evaluate, fit
from .data import NoisyPair


def check_images(X, image_shape=MNIST_SHAPE) -> np.ndarray:
    """Validate ``X`` and return it as float32 ``N x H x W x C`` images in [0, 1].

    Accepts flat ``N x (H*W*C)`` rows, ``N x H x W`` or ``N x H x W x C``.
    """
    X = check_array(X, dtype=np.float32, allow_nd=True, ensure_2d=False, ensure_min_samples=1)
    size = int(np.prod(image_shape))
    if X.ndim < 2 or X[0].size != size:
        raise ValueError(f"expected images with {size} values ({image_shape}), got shape {X.shape}")
    if X.min() < 0.0 or X.max() > 1.0:
        raise ValueError("pixel values must lie in [0, 1]")
    return np.ascontiguousarray(X.reshape((len(X),) + tuple(image_shape)))


class DenoisingAutoencoder(TransformerMixin, BaseEstimator):
    """Dense or convolutional denoising autoencoder for 28x28 grayscale images.

    ``fit`` trains on Gaussian-corrupted copies of ``X`` with ``X`` itself as
    the target.  ``predict`` returns reconstructions in the layout ``X`` was
    given in; ``transform`` returns flattened latent codes.

    Parameters
    ----------
    arch : {"conv", "dense"}
    epochs, batch_size : int
    loss : {"bce", "mse"}
    noise_factor : float
        Standard deviation of the additive noise before clipping to [0, 1].
    learning_rate, beta1, beta2, epsilon : float
        Adam hyperparameters.
    freeze_noise : bool
        Draw the training noise once instead of every epoch.
    random_state : int
        Seeds weight init, noise and shuffling.
    verbose : int
        Print one line per epoch when > 0.
    """

    def __init__(self, arch="conv", epochs=20, batch_size=128, loss="bce", noise_factor=0.5,
                 learning_rate=1e-3, beta1=0.9, beta2=0.999, epsilon=1e-7, freeze_noise=False,
                 random_state=0, verbose=0):
        self.arch = arch
        self.epochs = epochs
        self.batch_size = batch_size
        self.loss = loss
        self.noise_factor = noise_factor
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon
        self.freeze_noise = freeze_noise
        self.random_state = random_state
        self.verbose = verbose

    def _config(self) -> TrainConfig:
        return TrainConfig(
            epochs=self.epochs, batch_size=self.batch_size, loss=self.loss,
            noise_factor=self.noise_factor, seed=self._seed(), learning_rate=self.learning_rate,
            beta1=self.beta1, beta2=self.beta2, epsilon=self.epsilon, freeze_noise=self.freeze_noise)

    def _seed(self) -> int:
        return 0 if self.random_state is None else int(self.random_state)

    def fit(self, X, y=None, X_val=None):
        """Train on ``X``; ``X_val`` (optional) is scored after each epoch."""
        images = check_images(X)
        val = check_images(X_val) if X_val is not None else None
        config = self._config()
        self.model_ = build_model(self.arch, Rng(self._seed()))
        callback = (lambda r: print(r.line())) if self.verbose else None
        self.history_ = fit(self.model_, images, val, config, callback)
        self.n_features_in_ = images[0].size
        return self

    def predict(self, X):
        check_is_fitted(self, "model_")
        images = check_images(X)
        out = self.model_.predict(images)
        return out.reshape(np.shape(X))

    def transform(self, X):
        check_is_fitted(self, "model_")
        codes = self.model_.encode(check_images(X))
        return codes.reshape(len(codes), -1)

    def score(self, X, y=None):
        """Negative mean loss of reconstructing ``y`` (default ``X``) from ``X``."""
        check_is_fitted(self, "model_")
        noisy = check_images(X)
        clean = noisy if y is None else check_images(y)
        return -evaluate(self.model_, NoisyPair(clean, noisy), self.loss)

    def save(self, path) -> None:
        check_is_fitted(self, "model_")
        save_checkpoint(self.model_, path)

    @classmethod
    def from_checkpoint(cls, path, **params) -> "DenoisingAutoencoder":
        model = load_checkpoint(path)
        est = cls(arch=model.arch, **params)
        est.model_ = model
        est.history_ = []
        est.n_features_in_ = int(np.prod(model.input_shape))
        return est
