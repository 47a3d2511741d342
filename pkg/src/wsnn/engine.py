"""Sample presentation with first-spike winner-take-all, training and evaluation loops."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .config import NetworkConfig
from .delays import ArrivalSchedule, DelayMatrix, init_delays
from .encoding import SpikeTrain, ttfs_times
from .metrics import RunMetrics, SampleRecord
from .neurons import NeuronState, init_theta, step
from .plasticity import apply_learning

log = logging.getLogger(__name__)


@dataclass
class SimOutcome:
    t_first: int | None
    winners: np.ndarray
    # winner -> (afferent indices, arrival timesteps), every arrival <= t_first
    arrivals_seen: dict[int, tuple[np.ndarray, np.ndarray]]
    total_spikes: int
    abstained: bool
    margins: np.ndarray  # v - threshold per winner at fire time
    duration: int
    # input spikes emitted up to the halt, as (sources, emission timesteps)
    emitted: tuple[np.ndarray, np.ndarray] | None = None

    @property
    def n_winners(self) -> int:
        return len(self.winners)


class Network:
    """Delay matrix, adaptive thresholds and label assignment of one WSNN."""

    def __init__(self, config: NetworkConfig, delays: DelayMatrix | None = None,
                 theta: np.ndarray | None = None, assignment=None):
        self.config = config
        rng = np.random.default_rng(config.seed)
        if delays is None:
            delays = init_delays(config.n_neurons, config.n_inputs, config.max_delay, rng)
        if theta is None:
            theta = init_theta(config.n_neurons, rng, config.theta_init_max)
        if delays.shape != (config.n_neurons, config.n_inputs):
            raise ValueError(f"delay matrix shape {delays.shape} does not match config")
        self.delays = delays
        self.theta = np.asarray(theta, dtype=np.float64)
        self.assignment = assignment
        self.neuron_params = config.neuron_params()
        self.plasticity_params = config.plasticity_params()

    @property
    def horizon(self) -> int:
        return self.config.encoding_time + self.config.max_delay

    def copy(self) -> "Network":
        return Network(self.config, self.delays.copy(), self.theta.copy(), self.assignment)


def present(net: Network, train: SpikeTrain, learning: bool = True) -> SimOutcome:
    """Run one sample until the first output spike(s) or the end of the horizon.

    Every neuron crossing threshold in the first firing timestep is a
    winner. With ``learning`` the thresholds adapt and the delays are
    updated afterwards; otherwise the network is left untouched.
    """
    n_out = net.config.n_neurons
    d = net.delays.quantized()
    sched = ArrivalSchedule(net.config.max_delay, n_out)
    state = NeuronState.resting(net.neuron_params, net.theta)
    bounds = np.searchsorted(train.times, np.arange(net.horizon + 2))
    delivered: list[tuple[int, np.ndarray, np.ndarray]] = []
    emitted = 0
    t_first = None
    for t in range(net.horizon + 1):
        lo, hi = bounds[t], bounds[t + 1]
        if hi > lo:
            src = train.sources[lo:hi]
            sched.schedule_many(src, t, d[:, src])
            emitted += hi - lo
        targets, sources = sched.deliver()
        if len(targets):
            delivered.append((t, targets, sources))
        state = step(state, net.neuron_params, np.bincount(targets, minlength=n_out), adapt=learning)
        if state.fired.any():
            t_first = t
            break

    sent = (train.sources[:emitted], train.times[:emitted])
    if t_first is None:
        outcome = SimOutcome(None, np.empty(0, dtype=np.int64), {}, emitted, True,
                             np.empty(0), net.horizon + 1, sent)
    else:
        winners = np.flatnonzero(state.fired)
        outcome = SimOutcome(t_first, winners, _arrivals_for(winners, delivered),
                             emitted + len(winners), False, state.margin[winners], t_first + 1, sent)
    if learning:
        net.delays, net.theta = apply_learning(outcome, net.delays, state.theta,
                                               net.plasticity_params)
    return outcome


def _arrivals_for(winners, delivered):
    seen = {}
    for w in winners.tolist():
        srcs, times = [], []
        for t, targets, sources in delivered:
            hit = targets == w
            if hit.any():
                srcs.append(sources[hit])
                times.append(np.full(int(hit.sum()), t, dtype=np.int64))
        if srcs:
            seen[w] = (np.concatenate(srcs), np.concatenate(times))
        else:
            seen[w] = (np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64))
    return seen


class TtfsCache:
    """Precomputed TTFS spike times for a whole dataset."""

    def __init__(self, images: np.ndarray, t_enc: int):
        self.t_enc = t_enc
        self.times = ttfs_times(images.reshape(len(images), -1), t_enc)

    def train(self, i: int) -> SpikeTrain:
        t = self.times[i]
        src = np.flatnonzero(t >= 0)
        order = np.lexsort((src, t[src]))
        return SpikeTrain(src[order], t[src][order], self.t_enc)


def _record(step_no, index, label, outcome, prediction=None) -> SampleRecord:
    return SampleRecord(step=step_no, index=int(index), label=int(label), prediction=prediction,
                        t_first=outcome.t_first, n_winners=outcome.n_winners,
                        total_spikes=int(outcome.total_spikes), abstained=outcome.abstained,
                        duration=int(outcome.duration))


def sample_order(n: int, seed: int) -> np.ndarray:
    return np.random.default_rng(seed).permutation(n)


def train_epoch(net: Network, dataset, seed: int | None = None, progress: int = 0) -> RunMetrics:
    """One learning pass over ``dataset`` in a seeded shuffled order."""
    metrics = RunMetrics()
    if len(dataset) == 0:
        return metrics
    cache = TtfsCache(dataset.images, net.config.encoding_time)
    order = sample_order(len(dataset), net.config.seed if seed is None else seed)
    for k, i in enumerate(order):
        outcome = present(net, cache.train(i), learning=True)
        metrics.add(_record(k, i, dataset.labels[i], outcome))
        if progress and (k + 1) % progress == 0:
            recent = metrics.records[-progress:]
            log.info("trained %d/%d  mean winners %.2f  abstained %d", k + 1, len(dataset),
                     np.mean([r.n_winners for r in recent]), sum(r.abstained for r in recent))
    return metrics


def run_frozen(net: Network, dataset, on_outcome) -> None:
    """Present every sample in dataset order without learning."""
    cache = TtfsCache(dataset.images, net.config.encoding_time)
    for i in range(len(dataset)):
        on_outcome(i, present(net, cache.train(i), learning=False))


def evaluate(net: Network, dataset, assignment=None, start_step: int = 0) -> RunMetrics:
    """Frozen pass predicting every sample through the neuron-to-label assignment."""
    from .readout import predict

    assignment = assignment if assignment is not None else net.assignment
    if assignment is None:
        raise ValueError("model has no label assignments")
    metrics = RunMetrics()

    def collect(i, outcome):
        metrics.add(_record(start_step + i, i, dataset.labels[i], outcome, predict(outcome, assignment)))

    run_frozen(net, dataset, collect)
    return metrics

