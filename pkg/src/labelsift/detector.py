"""End-to-end mislabel detection: train a classifier on the (noisy) data,
re-score every instance by the predicted probability of its own label, and
return the lowest-scoring floor(alpha * N) instances for review."""

import csv
import json
import time
import warnings
from dataclasses import dataclass

import numpy as np

from .data import Dataset, preprocess
from .errors import ConfigurationError, DataError
from .model_selection import select_hyperparameters
from .training import Hyperparams, fit_conv, fit_dense, predict_proba

FULL_SCORES_DEFAULT_LIMIT = 100_000


@dataclass
class SuspicionRanking:
    """The floor(alpha * N) most suspicious instances, lowest score first.

    scores[i] is the trained model's predicted probability of instance
    indices[i] keeping its original label; ties are broken by ascending
    index. full_scores optionally retains the score of every instance.
    """

    indices: np.ndarray
    scores: np.ndarray
    alpha: float
    n: int
    full_scores: np.ndarray | None = None
    hyperparams: Hyperparams | None = None
    runtime_seconds: float = 0.0

    def __len__(self):
        return self.indices.size

    def pairs(self):
        return list(zip(self.indices.tolist(), self.scores.tolist()))

    def truncate(self, alpha: float) -> "SuspicionRanking":
        """A shorter ranking for a smaller alpha, reusing the same scores."""
        if not 0.0 < alpha <= self.alpha:
            raise ConfigurationError("BAD_ALPHA", f"alpha {alpha} must be in (0, {self.alpha}]")
        m = max(1, int(np.floor(alpha * self.n)))
        return SuspicionRanking(
            indices=self.indices[:m],
            scores=self.scores[:m],
            alpha=alpha,
            n=self.n,
            full_scores=self.full_scores,
            hyperparams=self.hyperparams,
            runtime_seconds=self.runtime_seconds,
        )


def suspicion_scores(labels: np.ndarray, probs: np.ndarray) -> np.ndarray:
    """Per-instance inner product of the one-hot label with the predicted
    distribution: the probability of the original label."""
    labels = np.asarray(labels)
    probs = np.asarray(probs)
    if labels.shape != probs.shape:
        raise DataError("SHAPE_MISMATCH", f"labels {labels.shape} and predictions {probs.shape} differ")
    return np.einsum("ij,ij->i", labels, probs)


def rank_ascending(scores: np.ndarray, alpha: float) -> SuspicionRanking:
    """Indices of the floor(alpha * N) lowest scores, ascending, ties by index.

    alpha = 1 returns all instances fully ordered. When floor(alpha * N)
    would be 0, the single lowest-scoring instance is returned with a
    warning (an empty review list is useless).
    """
    if not 0.0 < alpha <= 1.0:
        raise ConfigurationError("BAD_ALPHA", f"alpha must be in (0, 1], got {alpha}")
    scores = np.asarray(scores)
    n = scores.shape[0]
    m = int(np.floor(alpha * n))
    if m < 1:
        warnings.warn(f"alpha*N = {alpha * n:.3g} rounds down to 0; returning 1 instance", stacklevel=2)
        m = 1
    order = np.argsort(scores, kind="stable")[:m]
    return SuspicionRanking(indices=order.astype(np.int64), scores=scores[order], alpha=alpha, n=n)


def find_mislabeled(
    dataset: Dataset,
    alpha: float,
    seed: int = 0,
    workers: int | None = None,
    retain_full_scores: bool | None = None,
    cv_trace_path=None,
) -> SuspicionRanking:
    """Run the whole pipeline: preprocess, select hyperparameters, train on
    the full dataset, score every instance, and rank ascending."""
    if not 0.0 < alpha <= 1.0:
        raise ConfigurationError("BAD_ALPHA", f"alpha must be in (0, 1], got {alpha}")
    started = time.perf_counter()

    prepared = preprocess(dataset)
    hp = select_hyperparameters(prepared, seed, workers=workers, trace_path=cv_trace_path)
    if hp.architecture == "conv":
        model = fit_conv(prepared, hp)
    else:
        model = fit_dense(prepared, hp)
    probs = predict_proba(model, prepared.features)
    scores = suspicion_scores(prepared.labels, probs)
    ranking = rank_ascending(scores, alpha)

    if retain_full_scores is None:
        retain_full_scores = dataset.n <= FULL_SCORES_DEFAULT_LIMIT
    ranking.full_scores = scores if retain_full_scores else None
    ranking.hyperparams = hp
    ranking.runtime_seconds = time.perf_counter() - started
    return ranking


def ranking_report(ranking: SuspicionRanking, dataset: Dataset) -> dict:
    suspects = [
        {"index": int(i), "score": float(s), "original_label": dataset.label_name(int(np.argmax(dataset.labels[int(i)])))}
        for i, s in zip(ranking.indices, ranking.scores)
    ]
    return {
        "alpha": ranking.alpha,
        "n": ranking.n,
        "selected_hyperparams": ranking.hyperparams.to_dict() if ranking.hyperparams else None,
        "runtime_seconds": ranking.runtime_seconds,
        "suspects": suspects,
    }


def write_ranking_json(ranking: SuspicionRanking, dataset: Dataset, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(ranking_report(ranking, dataset), fh, indent=2)
        fh.write("\n")


def write_ranking_csv(ranking: SuspicionRanking, dataset: Dataset, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "score", "original_label"])
        for item in ranking_report(ranking, dataset)["suspects"]:
            writer.writerow([item["index"], item["score"], item["original_label"]])
