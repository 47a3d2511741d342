import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wsnn.metrics import EmptyMetrics, RunMetrics, SampleRecord, confusion_csv, summarize, trend_csv


def rec(step, label, prediction, n_winners=1, t_first=10, spikes=90):
    abstained = prediction is None and n_winners == 0
    return SampleRecord(step=step, index=step, label=label, prediction=prediction,
                        t_first=None if abstained else t_first, n_winners=n_winners,
                        total_spikes=spikes, abstained=abstained, duration=31 if abstained else t_first + 1)


record_strategy = st.builds(
    lambda step, label, pred, w, t: rec(step, label, None if w == 0 else pred, w, t),
    st.integers(0, 10_000), st.integers(0, 9), st.integers(0, 9), st.integers(0, 5), st.integers(0, 40))


def test_accuracy_counts_abstentions_as_wrong():
    m = RunMetrics([rec(0, 1, 1), rec(1, 2, 3), rec(2, 4, None, n_winners=0)])
    assert m.accuracy == pytest.approx(1 / 3)
    assert m.abstentions == 1
    cm = m.confusion()
    assert cm[1, 1] == 1 and cm[2, 3] == 1 and cm.sum() == 2


def test_all_correct_incorrect_split_absent():
    report = summarize(RunMetrics([rec(0, 1, 1, 2, 12), rec(1, 2, 2, 1, 8)]))
    split = report["split"]["n_winners"]
    assert split["correct"] == 1.5 and split["incorrect"] is None and split["relative_gap"] is None
    assert report["split"]["t_first"]["correct"] == 10.0


def test_relative_gaps():
    m = RunMetrics([rec(0, 1, 1, 2, 9), rec(1, 1, 1, 2, 9), rec(2, 1, 2, 4, 10)])
    split = summarize(m)["split"]
    assert split["n_winners"]["relative_gap"] == pytest.approx(0.5)
    assert split["t_first"]["relative_gap"] == pytest.approx(0.1)


def test_empty_summary_raises():
    with pytest.raises(EmptyMetrics):
        summarize(RunMetrics())


def test_replicates_spread():
    runs = [RunMetrics([rec(0, 1, 1)]), RunMetrics([rec(0, 1, 2)]), RunMetrics([rec(0, 1, 1)])]
    acc = summarize(runs)["accuracy"]
    assert acc["mean"] == pytest.approx(2 / 3)
    assert acc["std"] == pytest.approx(np.std([1, 0, 1], ddof=1))
    assert summarize(runs)["replicates"] == 3


def test_trend_windows():
    m = RunMetrics([rec(i, 0, 0, n_winners=w) for i, w in enumerate([3, 1, 2, 2, 5])])
    assert m.winner_trend(2) == [2.0, 2.0, 5.0]


def test_csv_exports():
    cm = np.eye(10, dtype=int)
    lines = confusion_csv(cm).splitlines()
    assert lines[0].startswith("truth,pred_0") and lines[1] == "0,1,0,0,0,0,0,0,0,0,0"
    assert trend_csv([2.5, 1.25], 500).splitlines() == ["start_sample,mean_winners", "0,2.5", "500,1.25"]


def test_jsonl_stream_fields():
    line = json.loads(RunMetrics([rec(0, 3, 3)]).to_jsonl())
    assert set(line) == {"index", "label", "prediction", "t_first", "n_winners", "total_spikes", "abstained"}


@settings(max_examples=200, deadline=None)
@given(st.lists(record_strategy, min_size=1, max_size=60), st.data(), st.integers(1, 20))
def test_report_properties(records, data, window):
    # unique steps so ordering is total
    records = [SampleRecord(**{**r.__dict__, "step": i, "index": i}) for i, r in enumerate(records)]
    whole = RunMetrics(records)
    cut = data.draw(st.integers(0, len(records)))
    perm = data.draw(st.permutations(records))
    a, b = RunMetrics(perm[:cut]), RunMetrics(perm[cut:])
    c = RunMetrics(perm[:cut // 2])
    d = RunMetrics(perm[cut // 2:cut])
    # merge is associative and insensitive to order
    assert summarize(a.merge(b), window) == summarize(whole, window)
    assert summarize(b.merge(a), window) == summarize(whole, window)
    assert summarize(c.merge(d).merge(b), window) == summarize(c.merge(d.merge(b)), window)
    report = summarize(whole, window)
    cm = np.array(report["confusion"])
    per_label = np.bincount([r.label for r in records if r.prediction is not None], minlength=10)
    assert cm.sum(axis=1).tolist() == per_label.tolist()
    assert report["accuracy"]["mean"] == sum(r.correct for r in records) / len(records)
    series = report["winner_trend"]["series"]
    assert len(series) == math.ceil(len(records) / window)
    counts = [r.n_winners for r in records]
    for k, v in enumerate(series):
        assert v == pytest.approx(np.mean(counts[k * window:(k + 1) * window]), abs=1e-12)
