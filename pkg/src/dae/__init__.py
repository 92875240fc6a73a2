"""Dense and convolutional denoising autoencoders on a small numpy engine."""
from .estimator import DenoisingAutoencoder, check_images
from .model import Model, build_conv_autoencoder, build_dense_autoencoder, build_model, load_checkpoint, save_checkpoint
from .tensor import Rng, gaussian_sample
from .trainer import EpochReport, TrainConfig, evaluate, fit

__all__ = [
    "DenoisingAutoencoder", "EpochReport", "Model", "Rng", "TrainConfig", "build_conv_autoencoder",
    "build_dense_autoencoder", "build_model", "check_images", "evaluate", "fit", "gaussian_sample",
    "load_checkpoint", "save_checkpoint",
]
__version__ = "0.1.0"
