import math

import numpy as np
import pytest

from dae.data import load_mnist
from dae.errors import DimensionError, NumericalError
from dae.model import build_conv_autoencoder, build_dense_autoencoder
from dae.tensor import Rng
from dae.trainer import TrainConfig, evaluate, fit, validation_pair


@pytest.fixture(scope="module")
def digits(mnist_dir):
    return load_mnist(mnist_dir, "train", limit=1000).images


@pytest.fixture(scope="module")
def held_out(mnist_dir):
    return load_mnist(mnist_dir, "test", limit=200).images


def weights_bytes(model):
    return b"".join(p.tobytes() for layer in model.layers for p in layer.params.values())


def losses_only(reports):
    return [(r.epoch, r.train_loss, r.val_loss) for r in reports]


def test_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(epochs=0)
    with pytest.raises(ValueError):
        TrainConfig(batch_size=0)
    with pytest.raises(ValueError):
        TrainConfig(loss="l1")
    with pytest.raises(ValueError):
        TrainConfig(noise_factor=-1)


def test_one_epoch_reduces_in_sample_loss(digits):
    images = digits[:64]
    model = build_conv_autoencoder(Rng(0))
    config = TrainConfig(epochs=1, seed=0)
    pair = validation_pair(images, config.noise_factor, config.seed)
    before = evaluate(model, pair)
    fit(model, images, None, config)
    assert evaluate(model, pair) < before


def test_untrained_bce_near_ln2(held_out):
    for model in (build_conv_autoencoder(Rng(2)), build_dense_autoencoder(Rng(2))):
        loss = evaluate(model, validation_pair(held_out, 0.5, 0))
        assert abs(loss - math.log(2)) < 0.15


def test_evaluate_is_pure(held_out):
    model = build_dense_autoencoder(Rng(3))
    pair = validation_pair(held_out, 0.5, 1)
    before = weights_bytes(model)
    count = model.param_count
    a = evaluate(model, pair)
    assert evaluate(model, pair) == a
    assert weights_bytes(model) == before and model.param_count == count


def test_evaluate_batching_matches_single_pass(held_out):
    model = build_dense_autoencoder(Rng(3))
    pair = validation_pair(held_out[:50], 0.5, 1)
    assert evaluate(model, pair, batch_size=7) == pytest.approx(evaluate(model, pair, batch_size=50), rel=1e-6)


def test_evaluate_empty():
    model = build_dense_autoencoder(Rng(0))
    with pytest.raises(ValueError):
        evaluate(model, validation_pair(np.zeros((0, 28, 28, 1), np.float32), 0.5, 0))


def test_fit_deterministic(digits, held_out):
    config = TrainConfig(epochs=2, batch_size=32, seed=4)
    runs = []
    for _ in range(2):
        model = build_dense_autoencoder(Rng(config.seed))
        reports = fit(model, digits[:256], held_out[:64], config)
        runs.append((losses_only(reports), weights_bytes(model)))
    assert runs[0] == runs[1]
    assert len(runs[0][0]) == 2


@pytest.mark.parametrize("freeze,draws", [(False, 3), (True, 1)])
def test_noise_redrawn_each_epoch_unless_frozen(digits, monkeypatch, freeze, draws):
    import dae.trainer
    noisy_batches = []
    real = dae.trainer.add_gaussian_noise

    def spy(images, factor, rng):
        pair = real(images, factor, rng)
        noisy_batches.append(pair.noisy.tobytes())
        return pair

    monkeypatch.setattr(dae.trainer, "add_gaussian_noise", spy)
    config = TrainConfig(epochs=3, batch_size=64, seed=1, freeze_noise=freeze)
    reports = fit(build_dense_autoencoder(Rng(1)), digits[:128], None, config)
    assert len(noisy_batches) == draws == len(set(noisy_batches))
    assert all(r.val_loss is None and r.train_loss > 0 for r in reports)


def test_reports_finite_and_mse(digits, held_out):
    model = build_dense_autoencoder(Rng(1))
    reports = fit(model, digits[:128], held_out[:32], TrainConfig(epochs=1, loss="mse", batch_size=32))
    r = reports[0]
    assert math.isfinite(r.train_loss) and r.train_loss >= 0 and r.val_loss >= 0 and r.seconds >= 0
    assert "epoch 1" in r.line()


def test_nan_aborts_with_location(digits):
    model = build_dense_autoencoder(Rng(0))
    model.layers[1].params["weights"][0, 0] = np.nan
    with pytest.raises(NumericalError, match="epoch 1, batch 0"):
        fit(model, digits[:64], None, TrainConfig(epochs=1))


def test_shape_mismatch_rejected():
    model = build_dense_autoencoder(Rng(0))
    with pytest.raises(DimensionError):
        fit(model, np.zeros((4, 14, 14, 1), np.float32), None, TrainConfig(epochs=1))


@pytest.mark.slow
def test_conv_train_loss_decreases_over_three_epochs(digits):
    model = build_conv_autoencoder(Rng(0))
    reports = fit(model, digits, None, TrainConfig(epochs=3, seed=0))
    losses = [r.train_loss for r in reports]
    assert losses[0] > losses[1] > losses[2]
