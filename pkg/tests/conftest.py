import os
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

DEFAULT_MNIST_DIR = "/root/data/mnist"


@pytest.fixture(scope="session")
def mnist_dir():
    path = Path(os.environ.get("MNIST_DIR", DEFAULT_MNIST_DIR))
    if not (path / "train-images-idx3-ubyte").exists() and not (path / "train-images-idx3-ubyte.gz").exists():
        pytest.skip(f"MNIST IDX files not found in {path} (set MNIST_DIR)")
    return path


@pytest.fixture
def rs():
    return np.random.default_rng(1234)


# (criterion number, passed, detail) rows filled in by test_acceptance.py
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, passed, detail in sorted(ACCEPTANCE, key=lambda row: row[0]):
        terminalreporter.write_line(f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}")
