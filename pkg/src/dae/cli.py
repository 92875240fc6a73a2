"""Command-line interface: ``dae train|eval|denoise|inspect``.

Exit codes: 0 success, 2 usage or input error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

from . import data as data_mod
from .errors import DAEError, NumericalError
from .model import ARCHS, build_model, load_checkpoint, save_checkpoint
from .pgm import read_pgm, triptych, write_pgm
from .tensor import Rng
from .trainer import TrainConfig, evaluate, fit, validation_pair

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERIC = 3

DENOISE_STREAM = 4
CSV_COLUMNS = ["epoch", "train_loss", "val_loss", "seconds"]


class UsageError(Exception):
    pass


def _add_data_args(p, limit_help):
    p.add_argument("--data-dir", help="directory holding the MNIST IDX files (default: $MNIST_DIR)")
    p.add_argument("--noise-factor", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--limit", type=int, default=None, help=limit_help)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dae", description="Denoising autoencoders on MNIST.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a model and write a checkpoint")
    p.add_argument("--model", choices=ARCHS, required=True)
    _add_data_args(p, "use only the first N training images")
    p.add_argument("--val-limit", type=int, default=None, help="use only the first N test images for validation")
    p.add_argument("--epochs", type=int, default=20)
    p.add_argument("--batch-size", type=int, default=128)
    p.add_argument("--loss", choices=["bce", "mse"], default="bce")
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--beta1", type=float, default=0.9)
    p.add_argument("--beta2", type=float, default=0.999)
    p.add_argument("--adam-eps", type=float, default=1e-7)
    p.add_argument("--freeze-noise", action="store_true", help="draw training noise once, not every epoch")
    p.add_argument("--out", help="checkpoint path (default: <model>.ckpt)")
    p.add_argument("--csv", help="write per-epoch reports to this CSV file")

    p = sub.add_parser("eval", help="print the validation loss of a checkpoint")
    p.add_argument("--checkpoint", required=True)
    _add_data_args(p, "use only the first N test images")
    p.add_argument("--loss", choices=["bce", "mse"], default="bce")

    p = sub.add_parser("denoise", help="write a clean | noisy | denoised PGM panel")
    p.add_argument("--checkpoint", required=True)
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--index", type=int, help="test-set image index")
    src.add_argument("--input", help="28x28 PGM image to corrupt and denoise")
    p.add_argument("--out", required=True)
    p.add_argument("--data-dir")
    p.add_argument("--noise-factor", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--separator", type=int, default=0, help="white columns between panels")

    p = sub.add_parser("inspect", help="print layer shapes and parameter counts")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--model", choices=ARCHS)
    src.add_argument("--checkpoint")
    return parser


def cmd_train(args) -> int:
    config = TrainConfig(
        epochs=args.epochs, batch_size=args.batch_size, loss=args.loss,
        noise_factor=args.noise_factor, seed=args.seed, learning_rate=args.lr,
        beta1=args.beta1, beta2=args.beta2, epsilon=args.adam_eps, freeze_noise=args.freeze_noise)
    train = data_mod.load_mnist(args.data_dir, "train", args.limit)
    val = data_mod.load_mnist(args.data_dir, "test", args.val_limit)
    model = build_model(args.model, Rng(args.seed))
    out = Path(args.out or f"{args.model}.ckpt")

    csv_file = open(args.csv, "w", newline="") if args.csv else None
    writer = None
    if csv_file is not None:
        writer = csv.writer(csv_file, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)

    def report(r):
        print(r.line(), flush=True)
        if writer is not None:
            writer.writerow([r.epoch, repr(r.train_loss), repr(r.val_loss), f"{r.seconds:.3f}"])
            csv_file.flush()

    try:
        fit(model, train.images, val.images, config, report)
    finally:
        if csv_file is not None:
            csv_file.close()
    save_checkpoint(model, out)
    print(f"checkpoint {out}")
    return EXIT_OK


def cmd_eval(args) -> int:
    model = load_checkpoint(args.checkpoint)
    test = data_mod.load_mnist(args.data_dir, "test", args.limit)
    pair = validation_pair(test.images, args.noise_factor, args.seed)
    print(f"val_loss {evaluate(model, pair, args.loss):.4f}")
    return EXIT_OK


def cmd_denoise(args) -> int:
    model = load_checkpoint(args.checkpoint)
    if args.input is not None:
        clean = read_pgm(args.input).astype(np.float32)[None, :, :, None] / np.float32(255.0)
        key = 0
    else:
        test = data_mod.load_mnist(args.data_dir, "test")
        if not 0 <= args.index < len(test):
            raise UsageError(f"index {args.index} out of range for {len(test)} test images")
        clean = test.images[args.index:args.index + 1]
        key = args.index
    if tuple(clean.shape[1:]) != model.input_shape:
        raise UsageError(f"image shape {clean.shape[1:3]} does not match the model input {model.input_shape}")
    pair = data_mod.add_gaussian_noise(clean, args.noise_factor, Rng(args.seed).derive(DENOISE_STREAM, key))
    denoised = model.forward(pair.noisy, cache=False)
    write_pgm(args.out, triptych(pair.clean[0, :, :, 0], pair.noisy[0, :, :, 0], denoised[0, :, :, 0],
                                 args.separator))
    print(f"wrote {args.out}")
    return EXIT_OK


def cmd_inspect(args) -> int:
    model = load_checkpoint(args.checkpoint) if args.checkpoint else build_model(args.model, Rng(0))
    print(f"model {model.arch}  input {'x'.join(map(str, model.input_shape))}")
    for row in model.summary():
        shape = "x".join(map(str, row["output_shape"]))
        print(f"{row['index']:>3}  {row['kind']:<17} {row['config']:<34} {shape:>9} {row['params']:>8}")
    print(f"latent {'x'.join(map(str, model.latent_shape))}")
    print(f"total_params {model.param_count}")
    return EXIT_OK


COMMANDS = {"train": cmd_train, "eval": cmd_eval, "denoise": cmd_denoise, "inspect": cmd_inspect}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args)
    except NumericalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (UsageError, DAEError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
