"""Command line interface: ``wsnn <command> [options]``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path


from . import model_io
from .config import load_config, save_config
from .encoding import encode_poisson, encode_ttfs
from .engine import Network, evaluate, train_epoch
from .metrics import confusion_csv, summarize, trend_csv
from .mnist import IdxError, find_split, load_idx, normalize
from .pso import Coefficients, ConfigObjective, SearchSpace, config_from_position, default_space, optimize
from .readout import build_assignment, linear_baseline

log = logging.getLogger("wsnn")

EXIT_ERROR = 1
EXIT_USAGE = 2
EXIT_UNASSIGNED = 3


class UsageError(Exception):
    pass


def _raw(args, split: str):
    if args.images and args.labels:
        raw = load_idx(args.images, args.labels, split)
    elif args.data:
        raw = load_idx(*find_split(args.data, split), split)
    else:
        raise UsageError("a data path is required (--data DIR or --images/--labels)")
    if args.limit:
        raw = raw.subset(slice(0, args.limit))
    return raw


def _config(args):
    config = load_config(args.config or "wsnn-3k")
    if args.seed is not None:
        config = config.replace(seed=args.seed)
    return config


def _write(path, text: str) -> None:
    if path:
        Path(path).write_text(text if text.endswith("\n") or not text else text + "\n")


def _normalized_for(net: Network, raw):
    target = net.config.target_total
    if target is None:
        log.warning("model has no stored intensity target; using this split's mean")
    return normalize(raw, target)


def cmd_train(args) -> int:
    config = _config(args)
    data = normalize(_raw(args, "train"))
    config = config.replace(target_total=data.target_total)
    net = Network(config)
    metrics = train_epoch(net, data, progress=args.progress)
    model_io.save(net, args.model)
    _write(args.metrics, metrics.to_jsonl())
    report = summarize(metrics, window=args.window)
    _write(args.report, json.dumps(report, indent=2))
    print(json.dumps({"samples": len(metrics), "model": str(args.model),
                      "winner_trend": report["winner_trend"]["series"]}))
    return 0


def cmd_assign(args) -> int:
    net = model_io.load(args.model)
    data = _normalized_for(net, _raw(args, "train"))
    net.assignment = build_assignment(net, data)
    model_io.save(net, args.out or args.model)
    assigned = int((net.assignment.label_of >= 0).sum())
    print(json.dumps({"assigned_neurons": assigned, "neurons": net.config.n_neurons}))
    return 0


def cmd_eval(args) -> int:
    net = model_io.load(args.model)
    if net.assignment is None:
        print("error: model has no label assignments", file=sys.stderr)
        return EXIT_UNASSIGNED
    data = _normalized_for(net, _raw(args, args.split))
    metrics = evaluate(net, data)
    report = summarize(metrics, window=args.window)
    _write(args.confusion, confusion_csv(metrics.confusion()))
    _write(args.metrics, metrics.to_jsonl())
    _write(args.report, json.dumps(report, indent=2))
    if args.trend:
        _write(args.trend, trend_csv(report["winner_trend"]["series"], args.window))
    print(json.dumps({"accuracy": report["accuracy"]["mean"], "abstentions": report["abstentions"],
                      "samples": report["n_samples"]}))
    return 0


def cmd_encode(args) -> int:
    raw = _raw(args, args.split)
    if not 0 <= args.index < len(raw):
        raise UsageError(f"index {args.index} outside 0..{len(raw) - 1}")
    image = normalize(raw).images[args.index]
    if args.scheme == "ttfs":
        t_enc = args.t_enc or _config(args).encoding_time
        train = encode_ttfs(image, t_enc)
    else:
        train = encode_poisson(image, args.duration, args.rate, args.seed or 0)
    print(train.to_jsonl())
    return 0


def cmd_search(args) -> int:
    base = _config(args)
    data = normalize(_raw(args, "train"))
    base = base.replace(target_total=data.target_total)
    if args.space:
        space = SearchSpace.from_dict(json.loads(Path(args.space).read_text()))
    else:
        space = default_space(extra=args.extra_dims)
    log_file = open(args.log, "w") if args.log else None

    def on_eval(row):
        if log_file:
            log_file.write(json.dumps(row) + "\n")
            log_file.flush()

    try:
        objective = ConfigObjective(base, space, data, args.train_n, args.val_n)
        result = optimize(objective, space, n_particles=args.particles, iterations=args.iterations,
                          seed=base.seed, coeffs=Coefficients(), workers=args.threads,
                          max_seconds=args.max_seconds, on_evaluation=on_eval)
    finally:
        if log_file:
            log_file.close()
    best = config_from_position(base, space, result.best_position)
    save_config(best, args.best)
    print(json.dumps({"best_fitness": result.best_fitness, "best": str(args.best)}))
    return 0


def cmd_maps(args) -> int:
    net = model_io.load(args.model)
    paths = model_io.export_delay_maps(net, args.out)
    print(json.dumps({"maps": len(paths), "directory": str(args.out)}))
    return 0


def cmd_baseline(args) -> int:
    train = normalize(_raw(args, "train"))
    test_raw = load_idx(*find_split(args.data, "test"), "test") if args.data else None
    if test_raw is None:
        raise UsageError("baseline needs --data DIR holding both splits")
    if args.limit:
        test_raw = test_raw.subset(slice(0, args.limit))
    test = normalize(test_raw, train.target_total)
    print(json.dumps({m: linear_baseline(train, test, m) for m in ("nearest-centroid", "least-squares")}))
    return 0


def _common(top: bool) -> argparse.ArgumentParser:
    # Subcommands repeat the global flags; SUPPRESS keeps them from resetting
    # values given before the subcommand name.
    default = (lambda v: v) if top else (lambda v: argparse.SUPPRESS)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=default(None), help="override the config seed")
    common.add_argument("--threads", type=int, default=default(1), help="worker processes (search)")
    common.add_argument("--config", default=default(None),
                        help="JSON config file or preset name (wsnn-1k .. wsnn-4k)")
    common.add_argument("-v", "--verbose", action="store_true", default=default(False))
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common(top=False)
    data = argparse.ArgumentParser(add_help=False)
    data.add_argument("--data", help="directory holding the MNIST IDX files (raw or .gz)")
    data.add_argument("--images", help="explicit IDX image file")
    data.add_argument("--labels", help="explicit IDX label file")
    data.add_argument("--limit", type=int, default=0, help="use only the first N samples")

    parser = argparse.ArgumentParser(prog="wsnn", parents=[_common(top=True)],
                                     description="Weightless spiking network with delay learning")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", parents=[common, data], help="one training epoch")
    p.add_argument("--model", default="model.wsnn")
    p.add_argument("--metrics", help="per-sample JSONL output")
    p.add_argument("--report", help="JSON report output")
    p.add_argument("--window", type=int, default=500)
    p.add_argument("--progress", type=int, default=1000, help="log every N samples (0: quiet)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("assign", parents=[common, data], help="label neurons from training data")
    p.add_argument("--model", required=True)
    p.add_argument("--out", help="output model (default: overwrite --model)")
    p.set_defaults(func=cmd_assign)

    p = sub.add_parser("eval", parents=[common, data], help="accuracy and confusion matrix")
    p.add_argument("--model", required=True)
    p.add_argument("--split", default="test", choices=["train", "test"])
    p.add_argument("--confusion", help="confusion matrix CSV output")
    p.add_argument("--metrics", help="per-sample JSONL output")
    p.add_argument("--report", help="JSON report output")
    p.add_argument("--trend", help="winner-trend CSV output")
    p.add_argument("--window", type=int, default=500)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("encode", parents=[common, data], help="dump one sample's spike train as JSON lines")
    p.add_argument("--index", type=int, required=True)
    p.add_argument("--split", default="train", choices=["train", "test"])
    p.add_argument("--scheme", default="ttfs", choices=["ttfs", "poisson"])
    p.add_argument("--t-enc", type=int, default=None)
    p.add_argument("--duration", type=int, default=250)
    p.add_argument("--rate", type=float, default=0.25)
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("search", parents=[common, data], help="particle swarm hyperparameter search")
    p.add_argument("--space", help="JSON list of {name, lo, hi, integer}")
    p.add_argument("--extra-dims", action="store_true", help="also search tau_stdp and theta_decay")
    p.add_argument("--train-n", type=int, default=2000)
    p.add_argument("--val-n", type=int, default=500)
    p.add_argument("--particles", type=int, default=20)
    p.add_argument("--iterations", type=int, default=20)
    p.add_argument("--max-seconds", type=float, default=None)
    p.add_argument("--log", default="search.jsonl")
    p.add_argument("--best", default="best-config.json")
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("maps", parents=[common], help="write per-neuron delay maps as PGM")
    p.add_argument("--model", required=True)
    p.add_argument("--out", default="maps")
    p.set_defaults(func=cmd_maps)

    p = sub.add_parser("baseline", parents=[common, data], help="linear decoder accuracies")
    p.set_defaults(func=cmd_baseline)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"wsnn {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (IdxError, model_io.ModelFormatError, OSError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
