"""Delay STDP, per-neuron delay normalization and demyelination."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .delays import DelayMatrix
from .neurons import theta_competition


@dataclass(frozen=True)
class PlasticityParams:
    """``learning_rate`` is applied as signed; negative values shorten causal delays."""

    learning_rate: float = -0.0374
    tau_stdp: float = 20.0
    m_norm: float = 0.73
    additive_decay: float = 0.000045
    timing: str = "emission"  # "arrival" measures delta_t from the post-delay arrival instead

    def __post_init__(self):
        if self.timing not in ("arrival", "emission"):
            raise ValueError("timing must be 'arrival' or 'emission'")
        if not self.tau_stdp > 0:
            raise ValueError("tau_stdp must be > 0")
        if not 0 < self.m_norm <= 1:
            raise ValueError("m_norm must lie in (0, 1]")
        if self.additive_decay < 0:
            raise ValueError("additive_decay must be >= 0")


def stdp_delta(delta_t, params: PlasticityParams):
    """Unclamped change ``learning_rate * exp(-delta_t / tau)`` for delta_t > 0, else 0."""
    delta_t = np.asarray(delta_t, dtype=np.float64)
    causal = delta_t > 0
    return np.where(causal, params.learning_rate * np.exp(-np.where(causal, delta_t, 0) / params.tau_stdp), 0.0)


def stdp_update(m, delta_t, params: PlasticityParams):
    """New normalized delay after one pre/post pairing.

    ``delta_t`` is post fire time minus afferent arrival time; pairings with
    ``delta_t <= 0`` leave the delay untouched.
    """
    m = np.asarray(m, dtype=np.float64)
    return np.where(np.asarray(delta_t) > 0, np.clip(m + stdp_delta(delta_t, params), 0.0, 1.0), m)


def normalize_delays(row: np.ndarray, m_norm: float) -> tuple[np.ndarray, bool]:
    """Rescale a neuron's afferent delays so their mean is ``m_norm``, clamped at 1.

    Returns the new row and a flag that is True when the row is all zeros
    (left unchanged).
    """
    new, degenerate = normalize_rows(np.atleast_2d(row), m_norm)
    return new[0], bool(degenerate[0])


def normalize_rows(m: np.ndarray, m_norm: float) -> tuple[np.ndarray, np.ndarray]:
    mean = m.mean(axis=1, keepdims=True)
    degenerate = mean[:, 0] <= 0
    scale = np.where(mean > 0, m_norm / np.where(mean > 0, mean, 1.0), 1.0)
    return np.minimum(m * scale, 1.0), degenerate


def demyelinate(m, c: float):
    """Slow additive drift of every delay toward the maximum."""
    if c < 0:
        raise ValueError("additive decay must be >= 0")
    return np.minimum(np.asarray(m, dtype=np.float64) + c, 1.0)


def apply_learning(outcome, matrix: DelayMatrix, theta: np.ndarray,
                   params: PlasticityParams) -> tuple[DelayMatrix, np.ndarray]:
    """Post-sample update: STDP on winners, theta re-centering, row
    normalization, then demyelination.

    ``theta`` must already include the winners' firing increment. An
    abstained sample only demyelinates.
    """
    m = matrix.m.copy()
    theta = np.asarray(theta, dtype=np.float64)
    if not outcome.abstained:
        for w in outcome.winners:
            if params.timing == "arrival":
                sources, t_pre = outcome.arrivals_seen[w]
            else:
                sources, t_pre = outcome.emitted
            delta = stdp_delta(outcome.t_first - t_pre, params)
            change = np.zeros(m.shape[1])
            np.add.at(change, sources, delta)
            touched = np.zeros(m.shape[1], dtype=bool)
            touched[sources[delta != 0]] = True
            m[w, touched] = np.clip(m[w, touched] + change[touched], 0.0, 1.0)
        theta = theta_competition(theta)
        m, _ = normalize_rows(m, params.m_norm)
    m = demyelinate(m, params.additive_decay)
    return DelayMatrix(m, matrix.max_delay), theta
