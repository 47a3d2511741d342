"""Input spike encoders: time-to-first-spike and Poisson."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass

import numpy as np

log = logging.getLogger(__name__)

# encoding windows the published experiments used; others are allowed but logged
TTFS_WINDOW_RANGE = (20, 32)


class WindowTooSmall(ValueError):
    pass


@dataclass
class SpikeTrain:
    """Input events sorted by time, then by source index."""

    sources: np.ndarray
    times: np.ndarray
    horizon: int

    def __len__(self) -> int:
        return len(self.sources)

    def events(self) -> list[tuple[int, int]]:
        return list(zip(self.sources.tolist(), self.times.tolist()))

    def to_jsonl(self) -> str:
        return "\n".join(json.dumps({"source": s, "t": t}) for s, t in self.events())


def _sorted_train(sources, times, horizon) -> SpikeTrain:
    order = np.lexsort((sources, times))
    return SpikeTrain(sources[order].astype(np.int64), times[order].astype(np.int64), int(horizon))


def ttfs_times(pixels: np.ndarray, t_enc: int) -> np.ndarray:
    """Spike time per pixel, -1 for black pixels."""
    p = np.asarray(pixels, dtype=np.float64)
    t = np.floor((1.0 - p) * (t_enc - 1) + 0.5).astype(np.int64)
    return np.where(p > 0, t, -1)


def encode_ttfs(image: np.ndarray, t_enc: int) -> SpikeTrain:
    """One spike per nonzero pixel; brighter pixels fire earlier.

    A pixel of brightness ``p > 0`` fires at ``round((1 - p) * (t_enc - 1))``,
    so full brightness fires at t = 0 and the dimmest pixels near
    ``t_enc - 1``. Black pixels stay silent.
    """
    if t_enc < 2:
        raise WindowTooSmall(f"t_enc must be >= 2, got {t_enc}")
    lo, hi = TTFS_WINDOW_RANGE
    if not lo <= t_enc <= hi:
        log.info("TTFS window %d outside the usual %d-%d range", t_enc, lo, hi)
    t = ttfs_times(np.ravel(image), t_enc)
    sources = np.flatnonzero(t >= 0)
    return _sorted_train(sources, t[sources], t_enc)


def encode_poisson(image: np.ndarray, duration: int, rate_scale: float, rng_seed: int) -> SpikeTrain:
    """Bernoulli spike train with per-step probability ``min(p * rate_scale, 1)``."""
    if duration < 1:
        raise ValueError("duration must be >= 1")
    if rate_scale <= 0:
        raise ValueError("rate_scale must be > 0")
    prob = np.minimum(np.ravel(image).astype(np.float64) * rate_scale, 1.0)
    rng = np.random.default_rng(rng_seed)
    fired = rng.random((duration, prob.size)) < prob
    times, sources = np.nonzero(fired)
    return SpikeTrain(sources.astype(np.int64), times.astype(np.int64), duration)
