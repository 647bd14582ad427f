"""Precision/recall of a suspicion ranking against injected noise, and the
multi-run benchmark harness (flip labels, detect, score, average)."""

import json
import time
from dataclasses import dataclass, replace as dc_replace

import numpy as np

from .data import Dataset
from .detector import SuspicionRanking, find_mislabeled
from .errors import ConfigurationError, LabelsiftError
from .noise import ClassGroups, NoiseRecord, REGIME_AT_RANDOM, flip_at_random, flip_completely_at_random
from .seeds import TAG_NOISE, TAG_RUN, derive_seed


@dataclass
class EvalReport:
    """Mean precision/recall per alpha over several independent runs."""

    dataset_name: str
    mu: float
    alphas: list
    runs: int
    regime: str
    precision_mean: list
    recall_mean: list
    per_run_precision: list
    per_run_recall: list
    per_run_hyperparams: list
    runtime_seconds: float
    completed_runs: int = None

    def __post_init__(self):
        if self.completed_runs is None:
            self.completed_runs = self.runs

    def to_dict(self) -> dict:
        return {
            "dataset": self.dataset_name,
            "mu": self.mu,
            "alphas": list(self.alphas),
            "runs": self.runs,
            "completed_runs": self.completed_runs,
            "regime": self.regime,
            "precision_mean": list(self.precision_mean),
            "recall_mean": list(self.recall_mean),
            "per_run_precision": [list(r) for r in self.per_run_precision],
            "per_run_recall": [list(r) for r in self.per_run_recall],
            "per_run_hyperparams": list(self.per_run_hyperparams),
            "runtime_seconds": self.runtime_seconds,
        }

    def render_table(self) -> str:
        """A human-readable row: runtime, then precision and recall per alpha."""
        alpha_header = " / ".join(f"{a:g}" for a in self.alphas)
        header = (
            f"{'dataset':24s} {'runtime':>10s}   "
            f"{'precision@' + alpha_header:28s}   recall@{alpha_header}"
        )
        row = (
            f"{(self.dataset_name or '-'):24s} {_fmt_runtime(self.runtime_seconds):>10s}   "
            f"{' / '.join(f'{p:.2f}' for p in self.precision_mean):28s}   "
            f"{' / '.join(f'{r:.2f}' for r in self.recall_mean)}"
        )
        return header + "\n" + row


def _fmt_runtime(seconds: float) -> str:
    if seconds >= 60:
        return f"{seconds / 60:.2f} min"
    return f"{seconds:.1f} sec"


def alpha_precision(ranking: SuspicionRanking, record: NoiseRecord) -> float:
    """|review set intersect flipped set| / |review set|."""
    _check_same_dataset(ranking, record)
    review = set(int(i) for i in ranking.indices)
    return len(review & record.flipped_set()) / len(review)


def alpha_recall(ranking: SuspicionRanking, record: NoiseRecord):
    """|review set intersect flipped set| / |flipped set|; None when no
    labels were flipped (the metric is undefined on clean data)."""
    _check_same_dataset(ranking, record)
    flipped = record.flipped_set()
    if not flipped:
        return None
    review = set(int(i) for i in ranking.indices)
    return len(review & flipped) / len(flipped)


def _check_same_dataset(ranking: SuspicionRanking, record: NoiseRecord):
    if ranking.n != record.n:
        raise ConfigurationError(
            "SIZE_MISMATCH", f"ranking is over {ranking.n} instances, noise record over {record.n}"
        )


class BenchmarkError(LabelsiftError):
    """A benchmark run failed; partial results are attached."""

    exit_status = 3

    def __init__(self, code, message, partial_report: EvalReport, cause: LabelsiftError):
        super().__init__(code, message)
        self.partial_report = partial_report
        self.cause = cause


def benchmark(
    dataset: Dataset,
    mu: float = 0.03,
    alphas=(0.01, 0.02, 0.03),
    runs: int = 5,
    seed: int = 0,
    regime: str = "completely_at_random",
    groups: ClassGroups | None = None,
    workers: int | None = None,
    dataset_name: str = "",
) -> EvalReport:
    """Inject noise, detect, and evaluate, `runs` times with fresh noise.

    Each run trains once at max(alphas); smaller alphas are evaluated by
    prefix truncation of the same ranking. Run seeds derive from the master
    seed, so reports are reproducible. A failed run aborts the benchmark
    with the completed runs attached to the raised BenchmarkError.
    """
    if runs < 1:
        raise ConfigurationError("BAD_RUNS", f"runs must be >= 1, got {runs}")
    alphas = sorted(float(a) for a in alphas)
    if not alphas or not all(0.0 < a <= 1.0 for a in alphas):
        raise ConfigurationError("BAD_ALPHA", f"alphas must lie in (0, 1], got {alphas}")
    if regime == REGIME_AT_RANDOM and groups is None:
        raise ConfigurationError("MISSING_GROUPS", "the at-random regime needs class groups")

    started = time.perf_counter()
    per_run_precision = []
    per_run_recall = []
    per_run_hp = []
    for run in range(runs):
        run_seed = derive_seed(seed, TAG_RUN, run)
        try:
            noisy_labels, record = _inject(dataset, mu, regime, groups, derive_seed(run_seed, TAG_NOISE))
            noisy = dc_replace(dataset, labels=noisy_labels)
            ranking = find_mislabeled(noisy, max(alphas), seed=run_seed, workers=workers, retain_full_scores=True)
        except LabelsiftError as exc:
            partial = _build_report(
                dataset_name, mu, alphas, runs, regime,
                per_run_precision, per_run_recall, per_run_hp,
                time.perf_counter() - started, completed=run,
            )
            raise BenchmarkError(
                "RUN_FAILED", f"run {run} failed ({exc.code}): {exc}", partial_report=partial, cause=exc
            ) from exc
        precisions = []
        recalls = []
        for a in alphas:
            sub = ranking.truncate(a)
            precisions.append(alpha_precision(sub, record))
            recalls.append(alpha_recall(sub, record))
        per_run_precision.append(precisions)
        per_run_recall.append(recalls)
        per_run_hp.append(ranking.hyperparams.to_dict())

    return _build_report(
        dataset_name, mu, alphas, runs, regime,
        per_run_precision, per_run_recall, per_run_hp,
        time.perf_counter() - started, completed=runs,
    )


def _inject(dataset, mu, regime, groups, noise_seed):
    if regime == REGIME_AT_RANDOM:
        return flip_at_random(dataset.labels, mu, groups, noise_seed)
    return flip_completely_at_random(dataset.labels, mu, noise_seed)


def _build_report(name, mu, alphas, runs, regime, precision, recall, hyperparams, runtime, completed):
    if precision:
        precision_mean = list(np.mean(np.asarray(precision, dtype=np.float64), axis=0))
        recall_mean = list(np.mean(np.asarray(recall, dtype=np.float64), axis=0))
    else:
        precision_mean = []
        recall_mean = []
    return EvalReport(
        dataset_name=name,
        mu=mu,
        alphas=list(alphas),
        runs=runs,
        regime=regime,
        precision_mean=precision_mean,
        recall_mean=recall_mean,
        per_run_precision=precision,
        per_run_recall=recall,
        per_run_hyperparams=hyperparams,
        runtime_seconds=runtime,
        completed_runs=completed,
    )


def write_eval_report(report: EvalReport, path, partial: bool = False):
    payload = report.to_dict()
    if partial:
        payload["partial"] = True
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")
