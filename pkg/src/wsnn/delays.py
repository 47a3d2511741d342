"""Normalized transmission delays, their quantization, and the arrival ring buffer."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

INIT_DELAY_MAX = 32


_SPLIT = 134217729.0  # 2**27 + 1, Veltkamp splitting constant


def quantize(m, max_delay: int):
    """Integer delay ``floor(max_delay * m)`` in timesteps, exact in ``m``.

    The float product can round up onto an integer (75 * fl(1/3) == 25.0)
    when the exact product lies just below it; the rounding error is
    recovered with an error-free product and such cases step down by one.
    """
    m = np.asarray(m, dtype=np.float64)
    p = max_delay * m
    d = np.floor(p)
    if max_delay < 2**26:
        c = _SPLIT * m
        hi = c - (c - m)
        err = (max_delay * hi - p) + max_delay * (m - hi)
        d = d - ((d == p) & (err < 0))
    return d.astype(np.int64)


def dequantize(d, max_delay: int) -> np.ndarray:
    """Normalized delay ``d / max_delay``, nudged one ulp up where the
    float quotient would otherwise quantize back to ``d - 1``."""
    d = np.asarray(d, dtype=np.int64)
    m = d / max_delay
    short = quantize(m, max_delay) < d
    m[short] = np.nextafter(m[short], 2.0)
    return m


def bit_width(max_delay: int) -> int:
    """Bits needed per stored delay: ceil(log2(max_delay + 1))."""
    return max(int(max_delay).bit_length(), 1)


@dataclass
class DelayMatrix:
    """Normalized delays ``m`` with shape (n_out, n_in), each in [0, 1]."""

    m: np.ndarray
    max_delay: int

    def __post_init__(self):
        if self.max_delay < 1:
            raise ValueError("max_delay must be >= 1")
        self.m = np.asarray(self.m, dtype=np.float64)

    @property
    def shape(self) -> tuple[int, int]:
        return self.m.shape

    def quantized(self) -> np.ndarray:
        return quantize(self.m, self.max_delay)

    @classmethod
    def from_quantized(cls, d: np.ndarray, max_delay: int) -> "DelayMatrix":
        return cls(dequantize(d, max_delay), max_delay)

    def copy(self) -> "DelayMatrix":
        return DelayMatrix(self.m.copy(), self.max_delay)


def init_delays(n_out: int, n_in: int, max_delay: int, rng) -> DelayMatrix:
    """Uniform integer delays in [0, min(32, max_delay)], stored normalized.

    ``rng`` is a seed or a ``numpy.random.Generator``.
    """
    if n_out < 1 or n_in < 1:
        raise ValueError("n_out and n_in must be >= 1")
    rng = np.random.default_rng(rng)
    d = rng.integers(0, min(INIT_DELAY_MAX, max_delay) + 1, size=(n_out, n_in))
    return DelayMatrix.from_quantized(d, max_delay)


class ArrivalSchedule:
    """Ring of ``max_delay + 1`` time buckets holding pending (target, source) arrivals.

    Each bucket is tagged with the absolute timestep it holds so a slot left
    over from an earlier lap is never read as current.
    """

    def __init__(self, max_delay: int, n_targets: int):
        self.max_delay = int(max_delay)
        self.n_targets = int(n_targets)
        self.size = self.max_delay + 1
        self.cursor = 0
        self._tags = np.full(self.size, -1, dtype=np.int64)
        self._targets: list[list[np.ndarray]] = [[] for _ in range(self.size)]
        self._sources: list[list[np.ndarray]] = [[] for _ in range(self.size)]

    def __len__(self) -> int:
        return sum(int(sum(len(a) for a in b)) for b in self._targets)

    def _bucket(self, t: int) -> int:
        slot = t % self.size
        if self._tags[slot] != t:
            if self._tags[slot] >= self.cursor:
                raise RuntimeError(f"bucket for t={t} still holds t={self._tags[slot]}")
            self._tags[slot] = t
            self._targets[slot].clear()
            self._sources[slot].clear()
        return slot

    def schedule(self, source: int, emit_t: int, delays: np.ndarray) -> None:
        """Schedule one source's spike onto every target, ``delays[j]`` steps later."""
        self.schedule_many(np.array([source]), emit_t, np.asarray(delays).reshape(-1, 1))

    def schedule_many(self, sources: np.ndarray, emit_t: int, delays: np.ndarray) -> None:
        """Schedule spikes from several sources emitted at the same step.

        ``delays`` has shape (n_targets, len(sources)).
        """
        if emit_t < self.cursor:
            raise ValueError(f"emit_t={emit_t} is before the cursor {self.cursor}")
        sources = np.asarray(sources, dtype=np.int64)
        if sources.size == 0:
            return
        delays = np.asarray(delays, dtype=np.int64)
        if delays.min() < 0 or emit_t + delays.max() > self.cursor + self.max_delay:
            raise ValueError("arrival falls outside the schedule window")
        arrive = (emit_t + delays).ravel()
        targets = np.repeat(np.arange(delays.shape[0]), delays.shape[1])
        srcs = np.tile(sources, delays.shape[0])
        order = np.argsort(arrive, kind="stable")
        arrive, targets, srcs = arrive[order], targets[order], srcs[order]
        times, starts = np.unique(arrive, return_index=True)
        bounds = np.append(starts, len(arrive))
        for t, lo, hi in zip(times.tolist(), bounds[:-1].tolist(), bounds[1:].tolist()):
            slot = self._bucket(t)
            self._targets[slot].append(targets[lo:hi])
            self._sources[slot].append(srcs[lo:hi])

    def deliver(self) -> tuple[np.ndarray, np.ndarray]:
        """Pop arrivals due at the cursor, then advance it by one step."""
        t = self.cursor
        slot = t % self.size
        if self._tags[slot] == t and self._targets[slot]:
            targets = np.concatenate(self._targets[slot])
            sources = np.concatenate(self._sources[slot])
            self._targets[slot].clear()
            self._sources[slot].clear()
        else:
            targets = sources = np.empty(0, dtype=np.int64)
        self.cursor += 1
        return targets, sources
