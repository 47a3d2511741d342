"""Particle swarm search over network hyperparameters."""

from __future__ import annotations

import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from .config import NetworkConfig
from .engine import Network, evaluate, train_epoch
from .readout import build_assignment

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Dimension:
    name: str
    lo: float
    hi: float
    integer: bool = False

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError(f"{self.name}: lo must be < hi")


@dataclass(frozen=True)
class SearchSpace:
    dims: tuple[Dimension, ...]

    @property
    def names(self) -> list[str]:
        return [d.name for d in self.dims]

    @property
    def lo(self) -> np.ndarray:
        return np.array([d.lo for d in self.dims])

    @property
    def hi(self) -> np.ndarray:
        return np.array([d.hi for d in self.dims])

    @property
    def integer(self) -> np.ndarray:
        return np.array([d.integer for d in self.dims])

    def project(self, x: np.ndarray) -> np.ndarray:
        """Clamp to the bounds, then round integer dimensions."""
        x = np.clip(x, self.lo, self.hi)
        return np.where(self.integer, np.round(x), x)

    def to_dict(self) -> list[dict]:
        return [{"name": d.name, "lo": d.lo, "hi": d.hi, "integer": d.integer} for d in self.dims]

    @classmethod
    def from_dict(cls, items: list[dict]) -> "SearchSpace":
        return cls(tuple(Dimension(**item) for item in items))


# Bounds bracket every row of the published parameter table.
TABLE_DIMENSIONS = (
    Dimension("additive_decay", 0.00001, 0.0001),
    Dimension("encoding_time", 16, 36, integer=True),
    Dimension("learning_rate", -0.1, -0.005),
    Dimension("max_synaptic_delays", 16, 72, integer=True),
    Dimension("neuron_threshold", -62.0, -46.0),
    Dimension("delay_norm", 0.3, 0.95),
    Dimension("spike_intensity", 0.2, 0.8),
    Dimension("theta_plus", 0.5, 3.0),
)
EXTRA_DIMENSIONS = (
    Dimension("tau_stdp", 2.0, 60.0),
    Dimension("theta_decay", 0.0, 0.001),
)


def default_space(extra: bool = False) -> SearchSpace:
    return SearchSpace(TABLE_DIMENSIONS + (EXTRA_DIMENSIONS if extra else ()))


@dataclass(frozen=True)
class Coefficients:
    inertia: float = 0.72
    cognitive: float = 1.49
    social: float = 1.49


@dataclass
class Particle:
    position: np.ndarray
    velocity: np.ndarray
    pbest_position: np.ndarray
    pbest_fitness: float = -np.inf
    seed: int = 0


def pso_step(swarm: list[Particle], gbest: np.ndarray, coeffs: Coefficients, rng,
             space: SearchSpace) -> list[Particle]:
    """Move every particle once; positions stay inside the space.

    ``rng`` only needs a ``random(size)`` method returning values in [0, 1].
    """
    for p in swarm:
        r1 = rng.random(len(p.position))
        r2 = rng.random(len(p.position))
        p.velocity = (coeffs.inertia * p.velocity
                      + coeffs.cognitive * r1 * (p.pbest_position - p.position)
                      + coeffs.social * r2 * (gbest - p.position))
        p.position = space.project(p.position + p.velocity)
    return swarm


@dataclass
class SearchResult:
    best_position: np.ndarray
    best_fitness: float
    gbest_history: list[float] = field(default_factory=list)
    evaluations: list[dict] = field(default_factory=list)


def init_swarm(space: SearchSpace, n_particles: int, rng: np.random.Generator) -> list[Particle]:
    span = space.hi - space.lo
    swarm = []
    for i in range(n_particles):
        x = space.project(rng.uniform(space.lo, space.hi))
        v = rng.uniform(-span, span) * 0.1
        swarm.append(Particle(x, v, x.copy(), -np.inf, int(rng.integers(2**31))))
    return swarm


def optimize(objective: Callable[[np.ndarray, int], float], space: SearchSpace, n_particles: int = 20,
             iterations: int = 50, seed: int = 0, coeffs: Coefficients = Coefficients(),
             workers: int = 1, max_seconds: float | None = None,
             on_evaluation: Callable[[dict], None] | None = None) -> SearchResult:
    """Maximize ``objective(position, seed)`` with a particle swarm.

    Each particle keeps its own evaluation seed, so results only depend on
    ``seed`` and not on ``workers``.
    """
    rng = np.random.default_rng(seed)
    swarm = init_swarm(space, n_particles, rng)
    result = SearchResult(swarm[0].position.copy(), -np.inf)
    start = time.monotonic()
    pool = ProcessPoolExecutor(workers) if workers > 1 else None
    try:
        for it in range(iterations):
            args = [(p.position, p.seed) for p in swarm]
            if pool is None:
                scores = [objective(x, s) for x, s in args]
            else:
                scores = list(pool.map(objective, *zip(*args)))
            for k, (p, score) in enumerate(zip(swarm, scores)):
                row = {"iteration": it, "particle": k, "position": p.position.tolist(), "score": float(score)}
                result.evaluations.append(row)
                if on_evaluation:
                    on_evaluation(row)
                if score > p.pbest_fitness:
                    p.pbest_fitness, p.pbest_position = float(score), p.position.copy()
                if score > result.best_fitness:
                    result.best_fitness, result.best_position = float(score), p.position.copy()
            result.gbest_history.append(result.best_fitness)
            if max_seconds is not None and time.monotonic() - start > max_seconds:
                log.info("search stopped after %d iterations (time budget)", it + 1)
                break
            if it + 1 < iterations:
                pso_step(swarm, result.best_position, coeffs, rng, space)
    finally:
        if pool is not None:
            pool.shutdown()
    return result


class Budget(NamedTuple):
    train_n: int
    val_n: int
    seed: int = 0


class FitnessResult(NamedTuple):
    score: float
    infeasible: bool


def fitness(candidate: NetworkConfig, dataset, budget: Budget) -> FitnessResult:
    """Validation accuracy after one training pass on a held-out split of ``dataset``.

    Both splits come from ``dataset``, the normalized training set. A candidate that
    never produces an output spike on validation scores 0 and is flagged.
    """
    order = np.random.default_rng(budget.seed).permutation(len(dataset))
    if budget.train_n + budget.val_n > len(dataset):
        raise ValueError("budget exceeds dataset size")
    train = dataset.subset(order[:budget.train_n])
    val = dataset.subset(order[budget.train_n:budget.train_n + budget.val_n])
    net = Network(candidate.replace(seed=budget.seed))
    train_epoch(net, train)
    assignment = build_assignment(net, train)
    metrics = evaluate(net, val, assignment)
    if metrics.abstentions == len(val):
        return FitnessResult(0.0, True)
    return FitnessResult(metrics.accuracy, False)


def config_from_position(base: NetworkConfig, space: SearchSpace, position) -> NetworkConfig:
    values = {}
    for dim, x in zip(space.dims, np.asarray(position).tolist()):
        values[dim.name] = int(round(x)) if dim.integer else float(x)
    return base.replace(**values)


class ConfigObjective:
    """Picklable objective mapping a position to validation accuracy."""

    def __init__(self, base: NetworkConfig, space: SearchSpace, dataset, train_n: int, val_n: int):
        self.base, self.space, self.dataset = base, space, dataset
        self.train_n, self.val_n = train_n, val_n

    def __call__(self, position, seed: int) -> float:
        config = config_from_position(self.base, self.space, position)
        result = fitness(config, self.dataset, Budget(self.train_n, self.val_n, seed))
        if result.infeasible:
            log.info("infeasible candidate: %s", json.dumps(config.to_dict()))
        return result.score
