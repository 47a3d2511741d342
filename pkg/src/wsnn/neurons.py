"""Discrete-time LIF output layer with an adaptive threshold offset."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class NeuronParams:
    v_rest: float = -65.0
    tau_m: float = 100.0  # timesteps; math.inf gives integrate-and-fire
    theta0: float = -52.0
    theta_plus: float = 1.5
    theta_decay: float = 1e-4
    spike_intensity: float = 0.41

    def __post_init__(self):
        if not self.tau_m > 0:
            raise ValueError("tau_m must be > 0 (or inf)")
        if self.theta_plus < 0:
            raise ValueError("theta_plus must be >= 0")
        if not 0 <= self.theta_decay < 1:
            raise ValueError("theta_decay must lie in [0, 1)")
        if not self.spike_intensity > 0:
            raise ValueError("spike_intensity must be > 0")

    @property
    def leak(self) -> float:
        return 0.0 if math.isinf(self.tau_m) else 1.0 / self.tau_m


@dataclass
class NeuronState:
    """State of a whole layer; ``margin`` is ``v - threshold`` before any reset."""

    v: np.ndarray
    theta: np.ndarray
    fired: np.ndarray
    margin: np.ndarray | None = None

    @classmethod
    def resting(cls, params: NeuronParams, theta: np.ndarray) -> "NeuronState":
        n = len(theta)
        return cls(np.full(n, params.v_rest), np.asarray(theta, dtype=np.float64),
                   np.zeros(n, dtype=bool))


def init_theta(n: int, rng: np.random.Generator, high: float = 0.1) -> np.ndarray:
    return rng.uniform(0.0, high, size=n)


def step(state: NeuronState, params: NeuronParams, arrivals, adapt: bool = True) -> NeuronState:
    """Advance every neuron one timestep.

    ``arrivals`` is the number of input spikes landing on each neuron this
    step. With ``adapt=False`` the threshold offset is frozen: it neither
    decays nor grows on a spike.
    """
    v = state.v + (params.v_rest - state.v) * params.leak + np.asarray(arrivals) * params.spike_intensity
    theta = state.theta * (1.0 - params.theta_decay) if adapt else state.theta.copy()
    margin = v - (params.theta0 + theta)
    fired = margin >= 0
    if fired.any():
        if adapt:
            theta = theta + fired * params.theta_plus
        v = np.where(fired, params.v_rest, v)
    return NeuronState(v, theta, fired, margin)


def theta_competition(theta: np.ndarray) -> np.ndarray:
    """Shift offsets so the smallest is exactly zero."""
    theta = np.asarray(theta, dtype=np.float64)
    return theta - theta.min()
