"""Automatic architecture and hyperparameter selection.

Numerical and text datasets get a 3-fold cross-validated search over a
fixed 24-point grid (depth x units x dropout) scored by macro-averaged F1;
image datasets skip the search and use the fixed convolutional network.
Fold fits derive their seeds from (run seed, point index, fold index), so
parallel and sequential evaluation give identical results.
"""

import csv
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import multiprocessing

import numpy as np

from .data import Dataset
from .errors import ConfigurationError, TrainingError
from .seeds import TAG_CV_FIT, TAG_FINAL_FIT, TAG_KFOLD, derive_seed
from .training import Hyperparams, fit_dense, predict_proba

GRID_DEPTHS = (1, 2, 3, 5)
GRID_UNITS = (50, 120)
GRID_DROPOUTS = (0.0, 0.1, 0.2)
CV_FOLDS = 3
CV_EPOCH_CAP = 50


@dataclass(frozen=True)
class GridPoint:
    depth: int
    units: int
    dropout: float
    architecture: str = "dense"


@dataclass
class CvResult:
    point: GridPoint
    fold_scores: list
    mean_score: float


def hyperparameter_grid(kind: str):
    """The search space for a dataset kind: 24 dense configurations for
    numerical/text data, a single fixed conv marker for images."""
    if kind == "image":
        return [GridPoint(depth=0, units=0, dropout=0.0, architecture="conv")]
    if kind in ("numerical", "text"):
        return [
            GridPoint(depth=d, units=u, dropout=p)
            for d in GRID_DEPTHS
            for u in GRID_UNITS
            for p in GRID_DROPOUTS
        ]
    raise ConfigurationError("BAD_KIND", f"unknown dataset kind {kind!r}")


def stratified_kfold(labels: np.ndarray, k: int, seed: int):
    """Partition {0..N-1} into k folds preserving class proportions.

    Per-class index lists are shuffled and dealt cyclically, so fold sizes
    differ by at most 1 overall and per class. Degrades to an unstratified
    split (with a warning) when any class has fewer than k members.
    """
    labels = np.asarray(labels)
    n = labels.shape[0]
    if n < k:
        raise ConfigurationError("TOO_FEW_INSTANCES", f"cannot make {k} folds from {n} instances")
    y_idx = np.argmax(labels, axis=1)
    counts = np.bincount(y_idx, minlength=labels.shape[1])
    rng = np.random.default_rng(seed)

    if counts[counts > 0].min() < k:
        warnings.warn(f"a class has fewer than {k} instances; folds are not stratified", stacklevel=2)
        order = rng.permutation(n)
    else:
        parts = []
        for c in range(labels.shape[1]):
            members = np.flatnonzero(y_idx == c)
            if members.size:
                parts.append(members[rng.permutation(members.size)])
        order = np.concatenate(parts)

    folds = [order[np.arange(start, n, k)] for start in range(k)]
    return [np.sort(f) for f in folds]


def balanced_f_score(true_labels, predicted_labels, num_classes: int) -> float:
    """Macro-averaged F1 over all classes; a class with zero precision and
    recall contributes 0."""
    t = np.asarray(true_labels, dtype=np.int64)
    p = np.asarray(predicted_labels, dtype=np.int64)
    if t.size != p.size or t.size == 0:
        raise ConfigurationError("BAD_LABEL_LISTS", "need equal-length, non-empty label lists")
    confusion = np.bincount(t * num_classes + p, minlength=num_classes * num_classes)
    confusion = confusion.reshape(num_classes, num_classes).astype(np.float64)
    tp = np.diag(confusion)
    predicted = confusion.sum(axis=0)
    actual = confusion.sum(axis=1)
    precision = np.divide(tp, predicted, out=np.zeros(num_classes), where=predicted > 0)
    recall = np.divide(tp, actual, out=np.zeros(num_classes), where=actual > 0)
    denom = precision + recall
    f1 = np.divide(2 * precision * recall, denom, out=np.zeros(num_classes), where=denom > 0)
    return float(f1.mean())


def _fit_point_fold(features, labels, kind, point, train_idx, test_idx, seed, epoch_cap):
    """Score one (grid point, fold) pair; divergence counts as a failure."""
    hp = Hyperparams(
        depth=point.depth, units=point.units, dropout=point.dropout, seed=seed, max_epochs=epoch_cap
    )
    train = Dataset(features=features[train_idx], labels=labels[train_idx], kind=kind)
    try:
        model = fit_dense(train, hp)
    except TrainingError:
        return None
    probs = predict_proba(model, features[test_idx])
    true_idx = np.argmax(labels[test_idx], axis=1)
    return balanced_f_score(true_idx, np.argmax(probs, axis=1), labels.shape[1])


def _run_task(args):
    point_idx, fold_idx, features, labels, kind, point, train_idx, test_idx, seed, cap = args
    with _single_threaded_blas():
        score = _fit_point_fold(features, labels, kind, point, train_idx, test_idx, seed, cap)
    return point_idx, fold_idx, score


def _single_threaded_blas():
    # CV fits are many small independent jobs; one BLAS thread apiece keeps
    # results identical between parallel and sequential execution.
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=1)


def default_workers() -> int:
    env = os.environ.get("LABELSIFT_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def select_hyperparameters(
    dataset: Dataset,
    seed: int,
    workers: int | None = None,
    trace_path=None,
    final_max_epochs: int = 200,
) -> Hyperparams:
    """Pick the best configuration for a preprocessed dataset.

    Image datasets return the fixed conv configuration immediately. For the
    rest, every grid point is scored by 3-fold cross-validated macro F1 and
    the best mean wins; ties prefer smaller models (depth, then units, then
    higher dropout), then grid order. The returned Hyperparams carry a
    derived seed and the full epoch budget for the final refit.
    """
    if dataset.kind == "image":
        return Hyperparams.conv(seed=derive_seed(seed, TAG_FINAL_FIT), max_epochs=final_max_epochs)

    points = hyperparameter_grid(dataset.kind)
    folds = stratified_kfold(dataset.labels, CV_FOLDS, derive_seed(seed, TAG_KFOLD))
    all_idx = np.arange(dataset.n)
    tasks = []
    for pi, point in enumerate(points):
        for fi in range(CV_FOLDS):
            test_idx = folds[fi]
            train_idx = np.setdiff1d(all_idx, test_idx, assume_unique=True)
            fit_seed = derive_seed(seed, TAG_CV_FIT, pi, fi)
            tasks.append(
                (pi, fi, dataset.features, dataset.labels, dataset.kind, point, train_idx, test_idx, fit_seed, CV_EPOCH_CAP)
            )

    workers = default_workers() if workers is None else max(1, workers)
    scores = {}
    if workers == 1:
        for task in tasks:
            pi, fi, score = _run_task(task)
            scores[pi, fi] = score
    else:
        ctx = multiprocessing.get_context("fork")
        with ProcessPoolExecutor(max_workers=workers, mp_context=ctx) as pool:
            for pi, fi, score in pool.map(_run_task, tasks, chunksize=1):
                scores[pi, fi] = score

    results = []
    for pi, point in enumerate(points):
        fold_scores = [scores[pi, fi] for fi in range(CV_FOLDS)]
        mean = 0.0 if any(s is None for s in fold_scores) else float(np.mean(fold_scores))
        results.append(CvResult(point=point, fold_scores=fold_scores, mean_score=mean))

    if trace_path is not None:
        _write_trace(trace_path, results)

    best = results[best_result_index(results)].point
    return Hyperparams(
        depth=best.depth,
        units=best.units,
        dropout=best.dropout,
        seed=derive_seed(seed, TAG_FINAL_FIT),
        max_epochs=final_max_epochs,
    )


def best_result_index(results) -> int:
    """Argmax of the mean CV score; ties prefer fewer parameters (smaller
    depth, then units, then higher dropout), then grid order."""
    return min(
        range(len(results)),
        key=lambda i: (
            -results[i].mean_score,
            results[i].point.depth,
            results[i].point.units,
            -results[i].point.dropout,
            i,
        ),
    )


def _write_trace(path, results):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["point_id", "depth", "units", "dropout", "fold", "f_score", "mean_f_score"])
        for pi, res in enumerate(results):
            for fi, score in enumerate(res.fold_scores):
                writer.writerow(
                    [pi, res.point.depth, res.point.units, res.point.dropout, fi,
                     "" if score is None else score, res.mean_score]
                )
