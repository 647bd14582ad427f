"""labelsift: find likely-mislabeled instances in classification datasets.

Train a classifier on the (possibly noisy) data, re-score every instance by
the predicted probability of its own label, and hand the lowest-scoring
fraction to a human reviewer. Includes a noise-injection and
precision/recall harness for quantitative evaluation.
"""

from .data import (
    Dataset,
    EmbeddingTable,
    class_weights,
    embed_document,
    min_max_scale,
    one_hot_encode,
    preprocess,
    standardize,
)
from .detector import SuspicionRanking, find_mislabeled, rank_ascending, suspicion_scores
from .errors import ConfigurationError, DataError, LabelsiftError, TrainingError
from .evaluation import EvalReport, alpha_precision, alpha_recall, benchmark
from .io import load_embeddings, load_idx_images, load_tabular, load_text
from .model_selection import balanced_f_score, hyperparameter_grid, select_hyperparameters, stratified_kfold
from .noise import ClassGroups, NoiseRecord, flip_at_random, flip_completely_at_random
from .synthetic import generate_blobs, generate_classification
from .training import Hyperparams, TrainedModel, fit_conv, fit_dense, load_model, predict_proba, save_model

__version__ = "0.1.0"

__all__ = [
    "Dataset",
    "EmbeddingTable",
    "Hyperparams",
    "TrainedModel",
    "SuspicionRanking",
    "NoiseRecord",
    "ClassGroups",
    "EvalReport",
    "LabelsiftError",
    "ConfigurationError",
    "DataError",
    "TrainingError",
    "one_hot_encode",
    "min_max_scale",
    "standardize",
    "embed_document",
    "class_weights",
    "preprocess",
    "load_tabular",
    "load_idx_images",
    "load_text",
    "load_embeddings",
    "fit_dense",
    "fit_conv",
    "predict_proba",
    "save_model",
    "load_model",
    "hyperparameter_grid",
    "stratified_kfold",
    "balanced_f_score",
    "select_hyperparameters",
    "suspicion_scores",
    "rank_ascending",
    "find_mislabeled",
    "flip_completely_at_random",
    "flip_at_random",
    "alpha_precision",
    "alpha_recall",
    "benchmark",
    "generate_blobs",
    "generate_classification",
    "__version__",
]
