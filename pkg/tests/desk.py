"""Data access and the train / assign / evaluate pipeline shared by the
acceptance criteria and the desk-scale proxy tests."""

from __future__ import annotations

import os
import time
from dataclasses import dataclass

import numpy as np

from wsnn.config import load_config
from wsnn.engine import Network, evaluate, train_epoch
from wsnn.mnist import RawDataset, find_split, load_idx, normalize
from wsnn.readout import build_assignment

MNIST_ENV = "WSNN_MNIST_DIR"


def full_mnist():
    """(train, test) RawDatasets from $WSNN_MNIST_DIR, or None."""
    root = os.environ.get(MNIST_ENV)
    if not root:
        return None
    try:
        return (load_idx(*find_split(root, "train"), "train"),
                load_idx(*find_split(root, "test"), "test"))
    except (OSError, ValueError):
        return None


def mnist_subset():
    """The 5,000-image MNIST training subset bundled with mlxtend, shuffled
    with seed 0 and split 4,000 / 1,000; None if mlxtend is missing."""
    try:
        from mlxtend.data import mnist_data
    except ImportError:
        return None
    x, y = mnist_data()
    order = np.random.default_rng(0).permutation(len(y))
    x = x.astype(np.uint8).reshape(-1, 28, 28)[order]
    y = y.astype(np.uint8)[order]
    return RawDataset(x[:4000], y[:4000], "train"), RawDataset(x[4000:], y[4000:], "test")


@dataclass
class PipelineResult:
    trained: object  # RunMetrics from training
    eval_trained: object
    eval_random: object | None
    net: Network
    seconds: float

    @property
    def gain(self) -> float:
        return self.eval_trained.accuracy - self.eval_random.accuracy


def pipeline(train_raw, test_raw, preset: str, n_train: int, n_assign: int, n_eval: int,
             seed: int = 0, with_random: bool = True, **overrides) -> PipelineResult:
    """Train one epoch on ``n_train`` samples, assign on the first ``n_assign``
    of them, evaluate on the first ``n_eval`` test samples. The comparison
    pipeline skips training and keeps the seed's random delays."""
    if n_train > len(train_raw) or n_assign > n_train or n_eval > len(test_raw):
        raise ValueError(f"needs {n_train} train / {n_eval} test samples, have "
                         f"{len(train_raw)} / {len(test_raw)}")
    start = time.monotonic()
    train_all = normalize(train_raw)
    order = np.random.default_rng(seed).permutation(len(train_all))
    train = train_all.subset(order[:n_train])
    assign = train.subset(np.arange(n_assign))
    test = normalize(test_raw, train_all.target_total).subset(np.arange(n_eval))

    config = load_config(preset).replace(seed=seed, target_total=train_all.target_total, **overrides)
    random_net = Network(config)
    net = random_net.copy()
    trained = train_epoch(net, train)
    eval_trained = evaluate(net, test, build_assignment(net, assign))
    eval_random = None
    if with_random:
        eval_random = evaluate(random_net, test, build_assignment(random_net, assign))
    return PipelineResult(trained, eval_trained, eval_random, net, time.monotonic() - start)
