"""Neuron-to-digit assignment, winner voting, and linear baseline decoders."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .engine import Network, run_frozen

UNASSIGNED = -1
N_CLASSES = 10


@dataclass
class Assignment:
    counts: np.ndarray  # (n_neurons, 10) winner tallies per label

    @classmethod
    def empty(cls, n_neurons: int) -> "Assignment":
        return cls(np.zeros((n_neurons, N_CLASSES), dtype=np.int64))

    @classmethod
    def from_labels(cls, label_of) -> "Assignment":
        """Assignment carrying only labels, e.g. after loading a model file."""
        label_of = np.asarray(label_of, dtype=np.int64)
        counts = np.zeros((len(label_of), N_CLASSES), dtype=np.int64)
        assigned = label_of != UNASSIGNED
        counts[np.flatnonzero(assigned), label_of[assigned]] = 1
        return cls(counts)

    @property
    def label_of(self) -> np.ndarray:
        # argmax picks the lowest digit on ties
        labels = np.argmax(self.counts, axis=1)
        return np.where(self.counts.any(axis=1), labels, UNASSIGNED)

    def record(self, winners, label: int) -> None:
        self.counts[np.asarray(winners, dtype=np.int64), label] += 1

    def merge(self, other: "Assignment") -> "Assignment":
        return Assignment(self.counts + other.counts)


def build_assignment(net: Network, dataset) -> Assignment:
    """Tally, without learning, which neurons win for which labels."""
    assignment = Assignment.empty(net.config.n_neurons)
    run_frozen(net, dataset, lambda i, outcome: assignment.record(outcome.winners, int(dataset.labels[i])))
    return assignment


def predict(outcome, assignment: Assignment, margins=None) -> int | None:
    """Majority label over the winners, or None to abstain.

    Unassigned winners do not vote. Vote ties go to the label whose winners
    had the larger summed firing margin, then to the lower digit.
    """
    if outcome.abstained or outcome.n_winners == 0:
        return None
    margins = outcome.margins if margins is None else np.asarray(margins, dtype=np.float64)
    labels = assignment.label_of[outcome.winners]
    voting = labels != UNASSIGNED
    if not voting.any():
        return None
    votes = np.bincount(labels[voting], minlength=N_CLASSES)
    margin_sum = np.bincount(labels[voting], weights=margins[voting], minlength=N_CLASSES)
    top = np.flatnonzero(votes == votes.max())
    if len(top) == 1:
        return int(top[0])
    best = top[margin_sum[top] == margin_sum[top].max()]
    return int(best[0])


def _flat(dataset) -> np.ndarray:
    return dataset.images.reshape(len(dataset), -1).astype(np.float64)


def nearest_centroid(train, test) -> np.ndarray:
    x, y = _flat(train), np.asarray(train.labels)
    centroids = np.full((N_CLASSES, x.shape[1]), np.nan)
    for c in range(N_CLASSES):
        if (y == c).any():
            centroids[c] = x[y == c].mean(axis=0)
    xt = _flat(test)
    dist = (xt ** 2).sum(1)[:, None] - 2 * xt @ np.nan_to_num(centroids).T + np.nansum(centroids ** 2, axis=1)
    dist[:, np.isnan(centroids).any(axis=1)] = np.inf
    return np.argmin(dist, axis=1)


def least_squares(train, test, ridge: float = 1.0) -> np.ndarray:
    """One-vs-all least squares on pixels plus a bias.

    The small ridge term keeps the fit stable when there are about as many
    training images as pixels; plain minimum-norm solutions collapse there.
    """
    x = _flat(train)
    x = np.hstack([x, np.ones((len(x), 1))])
    targets = np.eye(N_CLASSES)[np.asarray(train.labels, dtype=np.int64)]
    gram = x.T @ x + ridge * np.eye(x.shape[1])
    w = np.linalg.solve(gram, x.T @ targets)
    xt = _flat(test)
    return np.argmax(np.hstack([xt, np.ones((len(xt), 1))]) @ w, axis=1)


BASELINES = {"nearest-centroid": nearest_centroid, "least-squares": least_squares}


def linear_baseline(train, test, method: str = "nearest-centroid") -> float:
    """Test accuracy of a pixel-level linear decoder."""
    if len(train) == 0 or len(test) == 0:
        raise ValueError("both splits must be nonempty")
    pred = BASELINES[method](train, test)
    return float(np.mean(pred == np.asarray(test.labels)))
