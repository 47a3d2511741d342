import json
import subprocess
import sys

import numpy as np
import pytest

from conftest import blob_images
from wsnn.cli import main
from wsnn.config import load_config, save_config
from wsnn.mnist import RawDataset, save_idx


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    data = root / "data"
    data.mkdir()
    images, labels = blob_images(120, seed=8)
    save_idx(RawDataset(images[:80], labels[:80]), data / "train-images-idx3-ubyte", data / "train-labels-idx1-ubyte")
    save_idx(RawDataset(images[80:], labels[80:]), data / "t10k-images-idx3-ubyte", data / "t10k-labels-idx1-ubyte")
    save_config(load_config("wsnn-3k").replace(n_neurons=15), root / "small.json")
    return root


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_missing_data_path_is_usage_error(capsys):
    code, _, err = run(capsys, "train", "--config", "wsnn-3k.json")
    assert code == 2 and "usage" in err


def test_bad_flag_is_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["train", "--no-such-flag"])
    assert exc.value.code == 2


def test_full_workflow(capsys, workspace):
    w = workspace
    model = w / "m.wsnn"
    code, out, _ = run(capsys, "--seed", 3, "train", "--config", w / "small.json", "--data", w / "data",
                       "--model", model, "--metrics", w / "train.jsonl", "--report", w / "train.json")
    assert code == 0 and json.loads(out)["samples"] == 80
    assert len((w / "train.jsonl").read_text().splitlines()) == 80

    code, _, err = run(capsys, "eval", "--data", w / "data", "--model", model)
    assert code == 3 and "model has no label assignments" in err

    code, out, _ = run(capsys, "assign", "--data", w / "data", "--model", model)
    assert code == 0 and json.loads(out)["neurons"] == 15

    code, out, _ = run(capsys, "eval", "--data", w / "data", "--model", model, "--confusion", w / "cm.csv",
                       "--report", w / "report.json", "--trend", w / "trend.csv", "--window", 10)
    assert code == 0
    summary = json.loads(out)
    assert summary["samples"] == 40 and 0 <= summary["accuracy"] <= 1
    rows = (w / "cm.csv").read_text().splitlines()
    assert len(rows) == 11
    report = json.loads((w / "report.json").read_text())
    assert sum(map(sum, report["confusion"])) == 40 - report["abstentions"]
    assert len((w / "trend.csv").read_text().splitlines()) == 5

    code, out, _ = run(capsys, "maps", "--model", model, "--out", w / "maps")
    assert code == 0 and len(list((w / "maps").glob("*.pgm"))) == 15


def test_seed_flag_changes_model(capsys, workspace):
    w = workspace
    for seed in (1, 2):
        run(capsys, "train", "--config", w / "small.json", "--data", w / "data", "--seed", seed,
            "--model", w / f"s{seed}.wsnn", "--limit", 10)
    assert (w / "s1.wsnn").read_bytes() != (w / "s2.wsnn").read_bytes()
    run(capsys, "--seed", 1, "train", "--config", w / "small.json", "--data", w / "data",
        "--model", w / "s1b.wsnn", "--limit", 10)
    assert (w / "s1.wsnn").read_bytes() == (w / "s1b.wsnn").read_bytes()


def test_encode(capsys, workspace):
    code, out, _ = run(capsys, "encode", "--data", workspace / "data", "--index", 0, "--t-enc", 24)
    events = [json.loads(s) for s in out.splitlines()]
    assert code == 0 and events and all(0 <= e["t"] < 24 for e in events)
    assert len({e["source"] for e in events}) == len(events)
    code, _, _ = run(capsys, "encode", "--data", workspace / "data", "--index", 999)
    assert code == 2


def test_baseline(capsys, workspace):
    code, out, _ = run(capsys, "baseline", "--data", workspace / "data")
    acc = json.loads(out)
    assert code == 0 and set(acc) == {"nearest-centroid", "least-squares"}


def test_search(capsys, workspace):
    w = workspace
    code, out, _ = run(capsys, "--config", w / "small.json", "search", "--data", w / "data", "--train-n", 30,
                       "--val-n", 20, "--particles", 2, "--iterations", 2, "--log", w / "pso.jsonl",
                       "--best", w / "best.json")
    assert code == 0
    rows = [json.loads(s) for s in (w / "pso.jsonl").read_text().splitlines()]
    assert len(rows) == 4 and set(rows[0]) == {"iteration", "particle", "position", "score"}
    best = load_config(w / "best.json")
    assert best.n_neurons == 15 and json.loads(out)["best_fitness"] == max(r["score"] for r in rows)


def test_format_error_one_line(capsys, workspace):
    bad = workspace / "bad.wsnn"
    bad.write_bytes(b"JUNKJUNK")
    code, _, err = run(capsys, "maps", "--model", bad)
    assert code == 1 and err.strip().count("\n") == 0 and "BadMagic" in err


def test_idx_error_one_line(capsys, tmp_path):
    (tmp_path / "train-images-idx3-ubyte").write_bytes(b"\0\0\x08\x01")
    (tmp_path / "train-labels-idx1-ubyte").write_bytes(b"\0\0\x08\x01")
    code, _, err = run(capsys, "train", "--data", tmp_path)
    assert code == 1 and "BadMagic" in err


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "wsnn", "--help"], capture_output=True, text=True)
    assert out.returncode == 0 and "baseline" in out.stdout


def test_workflow_numbers_are_reproducible(capsys, workspace):
    w = workspace
    outs = []
    for k in range(2):
        run(capsys, "train", "--config", w / "small.json", "--data", w / "data", "--model", w / f"r{k}.wsnn",
            "--limit", 30)
        outs.append(np.frombuffer((w / f"r{k}.wsnn").read_bytes(), np.uint8))
    assert np.array_equal(*outs)
