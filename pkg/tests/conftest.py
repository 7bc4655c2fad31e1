import os

import pytest

REPO_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
MNIST_DIR = os.path.join(REPO_ROOT, "data", "mnist")


@pytest.fixture(scope="session")
def mnist_dir() -> str:
    return MNIST_DIR
