"""Per-sample run records and the aggregate report."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

REPORT_SCHEMA_VERSION = 1


class EmptyMetrics(ValueError):
    pass


@dataclass(frozen=True)
class SampleRecord:
    step: int  # position within the run
    index: int  # dataset index
    label: int
    prediction: int | None
    t_first: int | None
    n_winners: int
    total_spikes: int
    abstained: bool
    duration: int  # simulated timesteps

    @property
    def correct(self) -> bool:
        return self.prediction is not None and self.prediction == self.label


@dataclass
class RunMetrics:
    records: list[SampleRecord] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.records)

    def add(self, record: SampleRecord) -> None:
        self.records.append(record)

    def merge(self, other: "RunMetrics") -> "RunMetrics":
        return RunMetrics(self.records + other.records)

    def ordered(self) -> list[SampleRecord]:
        return sorted(self.records, key=lambda r: (r.step, r.index))

    @property
    def accuracy(self) -> float:
        if not self.records:
            return 0.0
        return sum(r.correct for r in self.records) / len(self.records)

    @property
    def abstentions(self) -> int:
        return sum(r.abstained for r in self.records)

    def confusion(self) -> np.ndarray:
        """10x10 counts, row = truth, column = prediction; abstentions are left out."""
        cm = np.zeros((10, 10), dtype=np.int64)
        for r in self.records:
            if r.prediction is not None:
                cm[r.label, r.prediction] += 1
        return cm

    def winner_trend(self, window: int = 500) -> list[float]:
        """Mean simultaneous-winner count per consecutive window (last one may be partial).

        Abstained samples count as zero winners.
        """
        counts = np.array([r.n_winners for r in self.ordered()], dtype=np.float64)
        return [float(counts[i:i + window].mean()) for i in range(0, len(counts), window)]

    def to_jsonl(self) -> str:
        return "\n".join(json.dumps(_stream_row(r)) for r in self.ordered())


def _stream_row(r: SampleRecord) -> dict:
    return {"index": r.index, "label": r.label, "prediction": r.prediction, "t_first": r.t_first,
            "n_winners": r.n_winners, "total_spikes": r.total_spikes, "abstained": r.abstained}


def _mean(values) -> float | None:
    values = list(values)
    return float(np.mean(values)) if values else None


def _relative_gap(correct: float | None, incorrect: float | None) -> float | None:
    """How much smaller the correct-split mean is, relative to the incorrect one."""
    if correct is None or incorrect is None or incorrect == 0:
        return None
    return (incorrect - correct) / incorrect


def split_stats(records) -> dict:
    fired = [r for r in records if not r.abstained]
    good = [r for r in fired if r.correct]
    bad = [r for r in fired if not r.correct]
    out = {}
    for name, key in (("n_winners", "n_winners"), ("t_first", "t_first")):
        c = _mean(getattr(r, key) for r in good)
        i = _mean(getattr(r, key) for r in bad)
        out[name] = {"correct": c, "incorrect": i, "relative_gap": _relative_gap(c, i)}
    return out


def summarize(runs, window: int = 500) -> dict:
    """Build the JSON report from one run or a list of replicate runs.

    Replicates supply the accuracy spread; every other field pools all
    records.
    """
    runs = [runs] if isinstance(runs, RunMetrics) else list(runs)
    pooled = RunMetrics([r for run in runs for r in run.records])
    if not pooled.records:
        raise EmptyMetrics("no records to summarize")
    accs = [run.accuracy for run in runs if run.records]
    records = pooled.ordered()
    fired = [r for r in records if not r.abstained]
    return {
        "schema_version": REPORT_SCHEMA_VERSION,
        "n_samples": len(records),
        "replicates": len(accs),
        "accuracy": {"mean": float(np.mean(accs)),
                     "std": float(np.std(accs, ddof=1)) if len(accs) > 1 else 0.0},
        "abstentions": pooled.abstentions,
        "confusion": pooled.confusion().tolist(),
        "winner_trend": {"window": window, "series": pooled.winner_trend(window)},
        "split": split_stats(records),
        "mean_duration": _mean(r.duration for r in records),
        "mean_t_first": _mean(r.t_first for r in fired),
        "mean_total_spikes": _mean(r.total_spikes for r in records),
        "mean_n_winners": _mean(r.n_winners for r in fired),
    }


def confusion_csv(cm: np.ndarray) -> str:
    header = "truth," + ",".join(f"pred_{d}" for d in range(cm.shape[1]))
    rows = [f"{t}," + ",".join(str(int(v)) for v in row) for t, row in enumerate(cm)]
    return "\n".join([header, *rows]) + "\n"


def trend_csv(series: list[float], window: int) -> str:
    rows = [f"{i * window},{v!r}" for i, v in enumerate(series)]
    return "\n".join(["start_sample,mean_winners", *rows]) + "\n"
