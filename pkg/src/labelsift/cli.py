"""Command-line interface.

Subcommands: detect (rank likely-mislabeled instances), inject (flip labels
with a ground-truth record), benchmark (noise + detect + precision/recall
over several runs), generate (synthetic datasets), inspect (dataset summary).

Exit codes: 0 success, 1 configuration error, 2 data error, 3 training
failure. Errors print one machine-parseable line: "error <CODE>: <text>".
"""

import argparse
import logging
import os
import sys

from . import io as lsio
from .data import Dataset
from .detector import find_mislabeled, ranking_report, write_ranking_csv, write_ranking_json
from .errors import ConfigurationError, LabelsiftError
from .evaluation import BenchmarkError, benchmark, write_eval_report
from .noise import (
    ClassGroups,
    REGIME_AT_RANDOM,
    REGIME_COMPLETELY_AT_RANDOM,
    flip_at_random,
    flip_completely_at_random,
    write_noise_record,
)
from .synthetic import generate


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on usage errors; route them through the
    # configuration-error path (exit 1) instead.
    def error(self, message):
        raise ConfigurationError("USAGE", message)


def _add_dataset_args(parser):
    group = parser.add_argument_group("dataset input (choose one style)")
    group.add_argument("--data", help="CSV table with a label column")
    group.add_argument("--label-column", default=None, help="label column name (needs header) or 0-based index")
    group.add_argument("--no-header", action="store_true", help="the CSV has no header row")
    group.add_argument("--images", help="IDX image file")
    group.add_argument("--idx-labels", help="IDX label file paired with --images")
    group.add_argument("--replicate-channels", action="store_true", help="repeat grayscale images into 3 channels")
    group.add_argument("--corpus", help="text corpus, one document per line")
    group.add_argument("--labels", help="labels file, one class per line (with --corpus)")
    group.add_argument("--embeddings", help="word2vec text-format embeddings (with --corpus)")
    group.add_argument("--synthetic", choices=["blobs", "classification"], help="bundled synthetic generator")
    group.add_argument("--n", type=int, default=4000, help="synthetic: instance count")
    group.add_argument("--d", type=int, default=12, help="synthetic: feature count")
    group.add_argument("--c", type=int, default=12, help="synthetic: class count")


def _add_run_args(parser):
    parser.add_argument("--seed", type=int, default=0, help="master random seed")
    parser.add_argument("--threads", type=int, default=None,
                        help="worker budget for the grid search (LABELSIFT_THREADS overrides)")


def _load_dataset(args) -> Dataset:
    styles = [bool(args.data), bool(args.images or args.idx_labels),
              bool(args.corpus or args.labels or args.embeddings), bool(args.synthetic)]
    if sum(styles) != 1:
        raise ConfigurationError(
            "DATASET_ARGS", "supply exactly one input style: --data, --images/--idx-labels, "
                            "--corpus/--labels/--embeddings, or --synthetic"
        )
    if args.data:
        if args.label_column is None:
            raise ConfigurationError("DATASET_ARGS", "--data needs --label-column")
        label_column = args.label_column
        if args.no_header:
            try:
                label_column = int(label_column)
            except ValueError:
                raise ConfigurationError(
                    "DATASET_ARGS", "--no-header needs a numeric --label-column index"
                ) from None
        return lsio.load_tabular(args.data, label_column, has_header=not args.no_header)
    if args.images or args.idx_labels:
        if not (args.images and args.idx_labels):
            raise ConfigurationError("DATASET_ARGS", "--images and --idx-labels go together")
        return lsio.load_idx_images(args.images, args.idx_labels, replicate_channels=args.replicate_channels)
    if args.corpus or args.labels or args.embeddings:
        if not (args.corpus and args.labels and args.embeddings):
            raise ConfigurationError("DATASET_ARGS", "text input needs --corpus, --labels, and --embeddings")
        table = lsio.load_embeddings(args.embeddings)
        return lsio.load_text(args.corpus, args.labels, table)
    return generate(args.synthetic, args.n, args.d, args.c, seed=args.seed)


def _workers(args) -> int:
    env = os.environ.get("LABELSIFT_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigurationError("BAD_THREADS", f"LABELSIFT_THREADS={env!r} is not an integer") from None
    if args.threads is not None:
        if args.threads < 1:
            raise ConfigurationError("BAD_THREADS", f"--threads must be >= 1, got {args.threads}")
        return args.threads
    return os.cpu_count() or 1


def _groups_for(args, dataset):
    if args.regime != "at-random":
        return REGIME_COMPLETELY_AT_RANDOM, None
    if not args.groups:
        raise ConfigurationError("MISSING_GROUPS", "--regime at-random needs --groups <json file>")
    groups = ClassGroups.from_json(args.groups, class_names=dataset.class_names,
                                   num_classes=dataset.num_classes)
    return REGIME_AT_RANDOM, groups


def cmd_detect(args) -> int:
    dataset = _load_dataset(args)
    retain = None
    if args.retain_full_scores:
        retain = True
    elif args.no_retain_full_scores:
        retain = False
    ranking = find_mislabeled(
        dataset, args.alpha, seed=args.seed, workers=_workers(args),
        retain_full_scores=retain, cv_trace_path=args.cv_trace,
    )
    write_ranking_json(ranking, dataset, args.output)
    if args.csv:
        write_ranking_csv(ranking, dataset, args.csv)

    hp = ranking.hyperparams
    if hp.architecture == "conv":
        print("selected hyperparameters: fixed convolutional network (lr=0.01)")
    else:
        print(f"selected hyperparameters: depth={hp.depth} units={hp.units} "
              f"dropout={hp.dropout:g} (lr={hp.learning_rate:g})")
    print(f"report written to {args.output}")
    print("top suspects (lowest label probability first):")
    for item in ranking_report(ranking, dataset)["suspects"][:10]:
        print(f"  index={item['index']:<8d} score={item['score']:.6f} label={item['original_label']}")
    return 0


def cmd_inject(args) -> int:
    dataset = _load_dataset(args)
    regime, groups = _groups_for(args, dataset)
    if regime == REGIME_AT_RANDOM:
        noisy, record = flip_at_random(dataset.labels, args.mu, groups, args.seed)
    else:
        noisy, record = flip_completely_at_random(dataset.labels, args.mu, args.seed)
    lsio.write_labels(args.output, noisy, class_names=dataset.class_names)
    write_noise_record(record, args.record)
    print(f"flipped {len(record.flipped_indices)} of {dataset.n} labels "
          f"({regime.replace('_', ' ')}); labels in {args.output}, record in {args.record}")
    return 0


def cmd_benchmark(args) -> int:
    dataset = _load_dataset(args)
    regime, groups = _groups_for(args, dataset)
    name = args.synthetic or args.data or args.images or args.corpus or "dataset"
    try:
        report = benchmark(
            dataset, mu=args.mu, alphas=args.alphas, runs=args.runs, seed=args.seed,
            regime=regime, groups=groups, workers=_workers(args), dataset_name=str(name),
        )
    except BenchmarkError as exc:
        write_eval_report(exc.partial_report, args.output, partial=True)
        print(f"partial results written to {args.output}", file=sys.stderr)
        raise
    write_eval_report(report, args.output)
    print(report.render_table())
    print(f"report written to {args.output}")
    return 0


def cmd_generate(args) -> int:
    dataset = generate(args.generator, args.n, args.d, args.c, seed=args.seed)
    lsio.write_tabular(dataset, args.output)
    print(f"wrote {dataset.n} x {dataset.features.shape[1]} {args.generator} dataset "
          f"with {dataset.num_classes} classes to {args.output}")
    return 0


def cmd_inspect(args) -> int:
    dataset = _load_dataset(args)
    print(f"kind: {dataset.kind}")
    print(f"instances: {dataset.n}")
    print(f"feature shape: {tuple(dataset.features.shape[1:])}")
    print(f"classes: {dataset.num_classes}")
    counts = dataset.labels.sum(axis=0).astype(int)
    for i, count in enumerate(counts):
        print(f"  {dataset.label_name(i)}: {count}")
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="labelsift", description="Find likely-mislabeled instances in classification datasets.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("detect", parents=[], help="rank instances by how unlikely their label looks")
    _add_dataset_args(p)
    _add_run_args(p)
    p.add_argument("--alpha", type=float, required=True, help="fraction of the dataset to return for review")
    p.add_argument("--output", default="suspects.json", help="JSON report path")
    p.add_argument("--csv", default=None, help="also write a CSV mirror of the report")
    p.add_argument("--retain-full-scores", action="store_true", help="keep all N scores in memory")
    p.add_argument("--no-retain-full-scores", action="store_true", help="drop per-instance scores after ranking")
    p.add_argument("--cv-trace", default=None, help="write the grid-search trace CSV here")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("inject", help="flip labels and record the ground truth")
    _add_dataset_args(p)
    _add_run_args(p)
    p.add_argument("--mu", type=float, required=True, help="fraction of labels to flip")
    p.add_argument("--regime", choices=["completely-at-random", "at-random"], default="completely-at-random")
    p.add_argument("--groups", default=None, help="JSON class-group file for the at-random regime")
    p.add_argument("--output", default="noisy_labels.txt", help="flipped labels file (one class per line)")
    p.add_argument("--record", default="noise_record.json", help="NoiseRecord JSON path")
    p.set_defaults(func=cmd_inject)

    p = sub.add_parser("benchmark", help="inject noise and measure detection precision/recall")
    _add_dataset_args(p)
    _add_run_args(p)
    p.add_argument("--mu", type=float, default=0.03, help="noise rate to inject")
    p.add_argument("--alphas", type=float, nargs="+", default=[0.01, 0.02, 0.03], help="review-set sizes to score")
    p.add_argument("--runs", type=int, default=5, help="independent runs to average over")
    p.add_argument("--regime", choices=["completely-at-random", "at-random"], default="completely-at-random")
    p.add_argument("--groups", default=None, help="JSON class-group file for the at-random regime")
    p.add_argument("--output", default="benchmark.json", help="evaluation report JSON path")
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("generate", help="write a synthetic dataset as CSV")
    p.add_argument("--generator", choices=["blobs", "classification"], required=True)
    p.add_argument("--n", type=int, required=True, help="instance count")
    p.add_argument("--d", type=int, required=True, help="feature count")
    p.add_argument("--c", type=int, required=True, help="class count")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", default="synthetic.csv", help="CSV output path")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("inspect", help="print a dataset summary")
    _add_dataset_args(p)
    _add_run_args(p)
    p.set_defaults(func=cmd_inspect)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "seed", 0) < 0:
            raise ConfigurationError("BAD_SEED", "seed must be a non-negative integer")
        return args.func(args)
    except BenchmarkError as exc:
        print(f"error {exc.cause.code}: {exc}", file=sys.stderr)
        return exc.cause.exit_status
    except LabelsiftError as exc:
        print(f"error {exc.code}: {exc}", file=sys.stderr)
        return exc.exit_status


if __name__ == "__main__":
    sys.exit(main())
