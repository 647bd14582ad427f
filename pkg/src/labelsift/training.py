"""Model fitting: mini-batch SGD with class-weighted cross-entropy and
early stopping on a stratified internal validation split, plus a versioned
binary checkpoint format."""

import json
import struct
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

from .data import Dataset, _training_class_weights
from .errors import ConfigurationError, DataError, TrainingError
from .network import (
    Network,
    build_conv_network,
    build_dense_network,
    build_from_descriptor,
    softmax,
    softmax_cross_entropy_grad,
    weighted_cross_entropy,
)

VALIDATION_FRACTION = 0.1
CHECKPOINT_MAGIC = b"LSMC"
CHECKPOINT_VERSION = 1


@dataclass
class Hyperparams:
    """One training configuration.

    depth/units/dropout describe the dense network and are ignored for the
    fixed convolutional architecture. The learning rate is deliberately
    aggressive (0.01) and training length is governed by early stopping:
    stop after `patience` consecutive epochs in which validation accuracy
    fails to improve on the best seen so far by at least `min_delta`.
    """

    depth: int = 1
    units: int = 50
    dropout: float = 0.0
    architecture: str = "dense"
    learning_rate: float = 0.01
    max_epochs: int = 200
    batch_size: int = 32
    patience: int = 15
    min_delta: float = 0.005
    seed: int = 0

    @classmethod
    def conv(cls, seed: int = 0, max_epochs: int = 200) -> "Hyperparams":
        return cls(architecture="conv", depth=0, units=0, dropout=0.0, seed=seed, max_epochs=max_epochs)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "Hyperparams":
        return cls(**d)


@dataclass
class TrainedModel:
    """A fitted classifier plus its training metadata."""

    network: Network
    architecture: dict
    hyperparams: Hyperparams
    epochs_run: int
    val_accuracy: float
    class_weights: np.ndarray
    loss_history: list = field(default_factory=list, repr=False)

    def predict_proba(self, features: np.ndarray) -> np.ndarray:
        return predict_proba(self, features)


def _check_hyperparams(hp: Hyperparams):
    if hp.max_epochs < 1:
        raise ConfigurationError("NO_EPOCHS", f"max_epochs is {hp.max_epochs}; no training possible")
    if hp.batch_size < 1:
        raise ConfigurationError("BAD_BATCH_SIZE", f"batch_size must be >= 1, got {hp.batch_size}")
    if hp.learning_rate <= 0:
        raise ConfigurationError("BAD_LEARNING_RATE", f"learning rate must be positive, got {hp.learning_rate}")
    if hp.patience < 1:
        raise ConfigurationError("BAD_PATIENCE", f"patience must be >= 1, got {hp.patience}")
    if not 0.0 <= hp.dropout < 1.0:
        raise ConfigurationError("BAD_DROPOUT", f"dropout must be in [0, 1), got {hp.dropout}")


def _stratified_holdout(label_idx, num_classes, fraction, rng):
    """Split indices into (train, validation) keeping class proportions.

    Returns None when any class has fewer than 2 instances; callers fall
    back to monitoring training accuracy.
    """
    counts = np.bincount(label_idx, minlength=num_classes)
    if counts[counts > 0].size and counts[counts > 0].min() < 2:
        return None
    val_parts = []
    for c in range(num_classes):
        members = np.flatnonzero(label_idx == c)
        if members.size == 0:
            continue
        members = members[rng.permutation(members.size)]
        n_val = min(max(1, int(round(members.size * fraction))), members.size - 1)
        val_parts.append(members[:n_val])
    val_idx = np.sort(np.concatenate(val_parts))
    train_idx = np.setdiff1d(np.arange(label_idx.size), val_idx, assume_unique=True)
    return train_idx, val_idx


def _accuracy(network, features, label_idx):
    probs = network.predict_proba(features)
    return float(np.mean(np.argmax(probs, axis=1) == label_idx))


def _train(dataset: Dataset, hp: Hyperparams, build) -> TrainedModel:
    rng = np.random.default_rng(hp.seed)
    x = dataset.features
    y = dataset.labels
    y_idx = dataset.label_indices
    weights = _training_class_weights(y)

    split = _stratified_holdout(y_idx, dataset.num_classes, VALIDATION_FRACTION, rng)
    if split is None:
        warnings.warn(
            "a class has fewer than 2 instances; early stopping falls back to training accuracy",
            stacklevel=3,
        )
        train_idx = np.arange(dataset.n)
        val_idx = None
    else:
        train_idx, val_idx = split

    network, architecture = build(rng)
    params = network.parameters()

    best_acc = -np.inf
    best_params = [p.copy() for p in params]
    stale_epochs = 0
    epochs_run = 0
    loss_history = []

    for epoch in range(1, hp.max_epochs + 1):
        order = train_idx[rng.permutation(train_idx.size)]
        epoch_loss = 0.0
        for start in range(0, order.size, hp.batch_size):
            batch = order[start : start + hp.batch_size]
            logits = network.forward(x[batch], train=True, rng=rng)
            probs = softmax(logits)
            loss = weighted_cross_entropy(probs, y[batch], weights)
            if not np.isfinite(loss):
                raise TrainingError("DIVERGED", f"non-finite training loss at epoch {epoch}")
            epoch_loss += loss * batch.size
            network.backward(softmax_cross_entropy_grad(probs, y[batch], weights))
            network.sgd_step(hp.learning_rate)
        loss_history.append(epoch_loss / order.size)
        epochs_run = epoch

        if val_idx is not None:
            acc = _accuracy(network, x[val_idx], y_idx[val_idx])
        else:
            acc = _accuracy(network, x[train_idx], y_idx[train_idx])

        improved_enough = acc >= best_acc + hp.min_delta
        if acc > best_acc:
            best_acc = acc
            best_params = [p.copy() for p in params]
        if improved_enough:
            stale_epochs = 0
        else:
            stale_epochs += 1
            if stale_epochs >= hp.patience:
                break

    network.set_parameters(best_params)
    return TrainedModel(
        network=network,
        architecture=architecture,
        hyperparams=hp,
        epochs_run=epochs_run,
        val_accuracy=best_acc,
        class_weights=weights,
        loss_history=loss_history,
    )


def fit_dense(dataset: Dataset, hp: Hyperparams) -> TrainedModel:
    """Train the dense feedforward classifier on a numerical or text dataset.

    The dataset is expected to be preprocessed already (see data.preprocess).
    """
    _check_hyperparams(hp)
    if hp.architecture != "dense":
        raise ConfigurationError("WRONG_ARCHITECTURE", "fit_dense needs dense hyperparameters")
    if dataset.kind not in ("numerical", "text"):
        raise ConfigurationError("WRONG_KIND", f"fit_dense handles numerical/text data, got kind={dataset.kind!r}")

    input_dim = dataset.features.shape[1]
    descriptor = {
        "type": "dense",
        "input_dim": int(input_dim),
        "num_classes": int(dataset.num_classes),
        "depth": int(hp.depth),
        "units": int(hp.units),
        "dropout": float(hp.dropout),
    }

    def build(rng):
        net = build_dense_network(rng, input_dim, dataset.num_classes, hp.depth, hp.units, hp.dropout)
        return net, descriptor

    return _train(dataset, hp, build)


def fit_conv(dataset: Dataset, hp: Hyperparams) -> TrainedModel:
    """Train the fixed convolutional classifier on a standardized image dataset."""
    _check_hyperparams(hp)
    if hp.architecture != "conv":
        raise ConfigurationError("WRONG_ARCHITECTURE", "fit_conv needs conv hyperparameters")
    if dataset.kind != "image":
        raise ConfigurationError("WRONG_KIND", f"fit_conv handles image data, got kind={dataset.kind!r}")

    input_shape = dataset.features.shape[1:]
    descriptor = {
        "type": "conv",
        "input_shape": [int(v) for v in input_shape],
        "num_classes": int(dataset.num_classes),
    }

    def build(rng):
        net = build_conv_network(rng, input_shape, dataset.num_classes)
        return net, descriptor

    return _train(dataset, hp, build)


def predict_proba(model: TrainedModel, features: np.ndarray) -> np.ndarray:
    """Class probabilities for each row of `features` (dropout disabled)."""
    features = np.asarray(features)
    if model.architecture["type"] == "dense":
        expected = (model.architecture["input_dim"],)
    else:
        expected = tuple(model.architecture["input_shape"])
    if features.shape[1:] != expected:
        raise DataError(
            "SHAPE_MISMATCH", f"model expects features of shape (N, {', '.join(map(str, expected))}), got {features.shape}"
        )
    return model.network.predict_proba(features.astype(np.float32, copy=False))


def save_model(model: TrainedModel, path):
    """Write a versioned binary checkpoint: JSON header plus little-endian
    float32 parameter tensors. Round-trips bit-exactly."""
    tensors = model.network.parameters()
    header = {
        "architecture": model.architecture,
        "hyperparams": model.hyperparams.to_dict(),
        "metadata": {
            "epochs_run": model.epochs_run,
            "val_accuracy": model.val_accuracy,
            "class_weights": [float(w) for w in model.class_weights],
        },
        "tensors": [list(t.shape) for t in tensors],
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<I", CHECKPOINT_VERSION))
        fh.write(struct.pack("<Q", len(blob)))
        fh.write(blob)
        for t in tensors:
            fh.write(np.ascontiguousarray(t, dtype="<f4").tobytes())


def load_model(path) -> TrainedModel:
    """Load a checkpoint written by save_model."""
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != CHECKPOINT_MAGIC:
            raise DataError("BAD_CHECKPOINT", f"{path} is not a model checkpoint")
        (version,) = struct.unpack("<I", fh.read(4))
        if version != CHECKPOINT_VERSION:
            raise DataError("BAD_CHECKPOINT_VERSION", f"unsupported checkpoint version {version}")
        (blob_len,) = struct.unpack("<Q", fh.read(8))
        header = json.loads(fh.read(blob_len).decode("utf-8"))
        network = build_from_descriptor(header["architecture"])
        values = []
        for shape in header["tensors"]:
            count = int(np.prod(shape)) if shape else 1
            raw = fh.read(count * 4)
            if len(raw) < count * 4:
                raise DataError("BAD_CHECKPOINT", f"{path}: truncated tensor payload")
            values.append(np.frombuffer(raw, dtype="<f4").reshape(shape).copy())
        network.set_parameters(values)
    meta = header["metadata"]
    return TrainedModel(
        network=network,
        architecture=header["architecture"],
        hyperparams=Hyperparams.from_dict(header["hyperparams"]),
        epochs_run=meta["epochs_run"],
        val_accuracy=meta["val_accuracy"],
        class_weights=np.array(meta["class_weights"], dtype=np.float64),
    )
