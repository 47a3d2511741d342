import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from wsnn.config import NetworkConfig  # noqa: E402

# one line per acceptance criterion, printed in the terminal summary
ACCEPTANCE_LINES: dict[int, str] = {}


def record_criterion(number: int, passed: bool, detail: str) -> None:
    line = f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def small_config():
    return NetworkConfig(n_neurons=12, n_inputs=784, max_synaptic_delays=20, encoding_time=16,
                         neuron_threshold=-60.0, spike_intensity=0.5, seed=7)


@pytest.fixture(scope="session")
def subset():
    from desk import mnist_subset

    data = mnist_subset()
    if data is None:
        pytest.skip("mlxtend (bundled MNIST subset) not installed")
    return data


def blob_images(n: int, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Synthetic 28x28 uint8 images: one bright bar per class, with noise."""
    rng = np.random.default_rng(seed)
    labels = rng.integers(0, 10, n).astype(np.uint8)
    images = np.zeros((n, 28, 28), dtype=np.uint8)
    for k, c in enumerate(labels):
        r = 2 + 2 * int(c)
        images[k, r:r + 3, 4:24] = rng.integers(150, 256, (3, 20))
        noise = rng.random((28, 28)) < 0.03
        images[k][noise] = rng.integers(1, 120, noise.sum())
    return images, labels
