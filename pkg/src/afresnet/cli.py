"""Command-line surface.

Subcommands: params, synth, train, eval, bench, report. Exit codes:
0 success, 1 usage error, 2 data error, 3 numeric failure. Commands that
write outputs also drop an ``invocation.txt`` provenance sidecar with the
full effective configuration into the output directory.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import __version__
from .config import ConfigError, parse_config, read_config_lines
from .data import (
    DataError,
    class_counts,
    generate_synthetic,
    load_dataset,
    preprocess,
    split,
    write_manifest,
)
from .evaluate import aggregate, emit_report, evaluate_dataset, f1_score
from .grid import REFERENCE_GRID
from .model import (
    PRESETS,
    CheckpointError,
    analytic_param_count,
    count_parameters,
    load_checkpoint,
    resolve_model,
)
from .nn import NumericError, backend
from .pipeline import TrainSpec, TrainingDiverged, read_results, run_experiment, train

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _echo_effective(args: dict, out_dir=None, command: str = ""):
    """Print the resolved configuration; mirror it to a sidecar when the
    command has an output directory."""
    lines = [f"command={command}", f"version={__version__}",
             f"backend={backend.name}"]
    lines += [f"{key}={value}" for key, value in sorted(args.items())
              if key not in ("func", "command")]
    for line in lines:
        print(line)
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "invocation.txt").write_text("\n".join(lines) + "\n",
                                                encoding="utf-8")


def _load_preprocessed(manifest):
    records = load_dataset(manifest)
    counts = class_counts(records)
    print(f"loaded {len(records)} records "
          f"(A={counts['A']}, N={counts['N']}, O={counts['O']}, ~={counts['~']})")
    return preprocess(records)


def _load_split(manifest, train_fraction, seed):
    return split(_load_preprocessed(manifest), train_fraction, seed)


def cmd_params(args) -> int:
    if args.table:
        failures = 0
        for index, (text, expected) in enumerate(REFERENCE_GRID, start=1):
            net = resolve_model(text)
            structural = count_parameters(net)
            analytic = analytic_param_count(text)
            ok = structural == analytic == expected
            failures += not ok
            print(f"{index:>2}  {structural:>8}  expected {expected:>8}  "
                  f"{'PASS' if ok else 'FAIL'}  {text}")
        return EXIT_OK if failures == 0 else EXIT_NUMERIC
    print(analytic_param_count(args.config))
    return EXIT_OK


def cmd_synth(args) -> int:
    _echo_effective(vars(args), args.out, "synth")
    records = generate_synthetic(args.n, args.af_frac, args.seed)
    manifest = write_manifest(records, args.out)
    labels = [r.label for r in records]
    print(f"wrote {len(records)} records to {manifest} "
          f"(A={labels.count('A')}, N={labels.count('N')}, "
          f"O={labels.count('O')})")
    return EXIT_OK


def cmd_train(args) -> int:
    if args.epochs < 1:
        raise UsageError("--epochs must be >= 1")
    resolve_model(args.config)  # fail early on a bad config
    _echo_effective(vars(args), args.out, "train")
    train_set, valid_set = _load_split(args.data, args.train_frac, args.seed)
    print(f"split: {len(train_set)} train / {len(valid_set)} valid")
    spec = TrainSpec(config=args.config, epochs=args.epochs,
                     batch_size=args.batch, crop_len=args.crop_len,
                     augment=not args.no_augment, seed=args.seed)
    ckpt = Path(args.out) / "model.ckpt"
    result = train(spec, train_set, valid_set, checkpoint_path=ckpt)
    losses = Path(args.out) / "losses.csv"
    losses.write_text(
        "epoch,train_loss\n"
        + "".join(f"{i},{v!r}\n" for i, v in enumerate(result.epoch_losses)),
        encoding="utf-8",
    )
    print(f"final train loss: {result.epoch_losses[-1]:.6g}")
    print(f"validation F1(A): {result.f1:.6g}")
    print(f"checkpoint: {result.checkpoint}")
    return EXIT_OK


def cmd_eval(args) -> int:
    _echo_effective(vars(args), args.out, "eval")
    net = load_checkpoint(args.model).eval()
    dataset = _load_preprocessed(args.data)
    probs, preds = evaluate_dataset(net, dataset, args.crop_len, args.threshold)
    score_a = f1_score(preds, dataset.labels, positive=1)
    print(f"records: {len(dataset)}  AF predicted: {int(preds.sum())}")
    print(f"F1(A): {score_a:.6g}")
    if args.both:
        print(f"F1(NO): {f1_score(preds, dataset.labels, positive=0):.6g}")
    if args.out:
        out = Path(args.out) / "predictions.csv"
        out.write_text(
            "record_id,probability,prediction,label\n"
            + "".join(
                f"{rec.id},{p!r},{int(c)},{int(l)}\n"
                for rec, p, c, l in zip(dataset.records, probs, preds,
                                        dataset.labels)
            ),
            encoding="utf-8",
        )
        print(f"predictions: {out}")
    return EXIT_OK


def cmd_bench(args) -> int:
    configs = read_config_lines(args.grid)
    for text in configs:  # fail early on a bad grid entry
        if text not in PRESETS:
            parse_config(text)
    _echo_effective(vars(args), args.out, "bench")
    train_set, valid_set = _load_split(args.data, args.train_frac, args.seed)
    print(f"split: {len(train_set)} train / {len(valid_set)} valid")
    results = run_experiment(
        configs, args.repeats, args.seed, train_set, valid_set, args.out,
        epochs=args.epochs, batch_size=args.batch, crop_len=args.crop_len,
        workers=args.workers,
    )
    print(f"{len(results)} new runs; results in {Path(args.out) / 'results.csv'}")
    return EXIT_OK


def cmd_report(args) -> int:
    _echo_effective(vars(args), args.out, "report")
    rows = read_results(args.results)
    if not rows:
        raise DataError(f"no result rows in {args.results}")
    paths = emit_report(aggregate(rows), args.out, crop_len=args.crop_len,
                        threshold=args.threshold)
    for name, path in paths.items():
        print(f"{name}: {path}")
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="afresnet", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("params", help="parameter counts for a configuration")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--config", help="configuration string or preset name")
    group.add_argument("--table", action="store_true",
                       help="check all 30 reference entries")
    p.set_defaults(func=cmd_params)

    p = sub.add_parser("synth", help="generate a synthetic ECG dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--n", type=int, default=400)
    p.add_argument("--af-frac", type=float, default=0.25)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="train one configuration")
    p.add_argument("--config", required=True)
    p.add_argument("--data", required=True, help="manifest path")
    p.add_argument("--epochs", type=int, default=300)
    p.add_argument("--batch", type=int, default=32)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--crop-len", type=int, default=3000)
    p.add_argument("--train-frac", type=float, default=0.8)
    p.add_argument("--no-augment", action="store_true")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint on a manifest")
    p.add_argument("--model", required=True, help="checkpoint path")
    p.add_argument("--data", required=True, help="manifest path")
    p.add_argument("--crop-len", type=int, default=3000)
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--both", action="store_true",
                   help="also print the non-AF class F1")
    p.add_argument("--out", default=None,
                   help="optionally write per-record predictions here")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("bench", help="run a benchmark grid")
    p.add_argument("--grid", required=True, help="one config per line")
    p.add_argument("--data", required=True, help="manifest path")
    p.add_argument("--repeats", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--epochs", type=int, default=300)
    p.add_argument("--batch", type=int, default=32)
    p.add_argument("--crop-len", type=int, default=3000)
    p.add_argument("--train-frac", type=float, default=0.8)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("report", help="aggregate results and emit tables")
    p.add_argument("--results", required=True, help="results CSV path")
    p.add_argument("--out", required=True)
    p.add_argument("--crop-len", type=int, default=3000)
    p.add_argument("--threshold", type=float, default=0.5)
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConfigError, KeyError, ValueError) as exc:
        if isinstance(exc, (DataError, CheckpointError)):
            print(f"data error: {exc}", file=sys.stderr)
            return EXIT_DATA
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError,) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (NumericError, TrainingDiverged, ArithmeticError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


def entry():
    sys.exit(main())


if __name__ == "__main__":
    entry()
