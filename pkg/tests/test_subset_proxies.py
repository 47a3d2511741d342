"""Desk-scale proxies for the data-dependent criteria.

These run on the 5,000-image MNIST subset shipped with mlxtend (4,000 train,
1,000 test) with a 200-neuron network using the 1k-row hyperparameters. They
are smoke checks of the same effects at reduced scale, not substitutes for
the acceptance criteria, which need the full dataset.
"""

import pytest

from desk import pipeline
from wsnn.metrics import summarize
from wsnn.readout import linear_baseline
from wsnn.mnist import normalize

pytestmark = pytest.mark.slow


@pytest.fixture(scope="module")
def run(subset):
    train, test = subset
    return pipeline(train, test, "wsnn-1k", n_train=4000, n_assign=4000, n_eval=1000, n_neurons=200)


def test_training_beats_random_delays(run):
    assert run.gain >= 0.20, (run.eval_trained.accuracy, run.eval_random.accuracy)


def test_winner_count_falls_during_training(run):
    trend = run.trained.winner_trend(500)
    assert trend[-1] < trend[0]


def test_correct_answers_are_sparser_and_earlier(run):
    split = summarize(run.eval_trained)["split"]
    assert split["n_winners"]["correct"] < split["n_winners"]["incorrect"]
    assert split["t_first"]["correct"] < split["t_first"]["incorrect"]


def test_spike_budget(run):
    s = summarize(run.eval_trained)
    assert 5 <= s["mean_duration"] <= 30
    assert 50 <= s["mean_total_spikes"] <= 150


def test_linear_baselines(subset):
    train_raw, test_raw = subset
    train = normalize(train_raw)
    test = normalize(test_raw, train.target_total)
    for method in ("nearest-centroid", "least-squares"):
        assert linear_baseline(train, test, method) >= 0.55
