"""Dataset container and preprocessing for numerical, image, and text data."""

from dataclasses import dataclass, replace

import numpy as np

from .errors import DataError

KINDS = ("numerical", "image", "text")


@dataclass
class Dataset:
    """A classification dataset in uniform form.

    features: float32 tensor, shape (N, D) for numerical/text data or
        (N, H, W, Ch) for images.
    labels: float32 one-hot matrix of shape (N, C); every row has exactly
        one entry equal to 1.
    kind: "numerical", "image", or "text".
    class_names: optional list of C display names, index-aligned with the
        label columns.
    """

    features: np.ndarray
    labels: np.ndarray
    kind: str
    class_names: list | None = None

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float32)
        self.labels = np.asarray(self.labels, dtype=np.float32)
        self.validate()

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def num_classes(self) -> int:
        return self.labels.shape[1]

    @property
    def label_indices(self) -> np.ndarray:
        """Class index per instance, decoded from the one-hot rows."""
        return np.argmax(self.labels, axis=1).astype(np.int64)

    def label_name(self, class_index: int):
        if self.class_names is not None:
            return self.class_names[class_index]
        return int(class_index)

    def validate(self):
        if self.kind not in KINDS:
            raise DataError("BAD_KIND", f"unknown dataset kind {self.kind!r}; expected one of {KINDS}")
        if self.labels.ndim != 2:
            raise DataError("BAD_LABEL_SHAPE", f"labels must be a 2-d one-hot matrix, got shape {self.labels.shape}")
        if self.features.shape[0] != self.labels.shape[0]:
            raise DataError(
                "COUNT_MISMATCH",
                f"{self.features.shape[0]} feature rows but {self.labels.shape[0]} label rows",
            )
        n, c = self.labels.shape
        if c < 2:
            raise DataError("TOO_FEW_CLASSES", f"need at least 2 classes, got {c}")
        if n < c:
            raise DataError("TOO_FEW_INSTANCES", f"need at least as many instances ({n}) as classes ({c})")
        if not np.all((self.labels == 0.0) | (self.labels == 1.0)):
            raise DataError("NOT_ONE_HOT", "label entries must be exactly 0 or 1")
        rows = self.labels.sum(axis=1)
        if not np.all(rows == 1.0):
            bad = int(np.argmax(rows != 1.0))
            raise DataError("NOT_ONE_HOT", f"label row {bad} sums to {rows[bad]}, expected exactly 1")
        if not np.all(np.isfinite(self.features)):
            raise DataError("NON_FINITE_FEATURE", "features contain NaN or infinite entries")
        if self.kind == "image":
            if self.features.ndim != 4:
                raise DataError("BAD_IMAGE_SHAPE", f"image features must be (N, H, W, Ch), got {self.features.shape}")
            if self.features.shape[3] not in (1, 3):
                raise DataError("BAD_CHANNELS", f"image channel count must be 1 or 3, got {self.features.shape[3]}")
        elif self.features.ndim != 2:
            raise DataError("BAD_FEATURE_SHAPE", f"{self.kind} features must be (N, D), got {self.features.shape}")
        if self.class_names is not None and len(self.class_names) != c:
            raise DataError("BAD_CLASS_NAMES", f"{len(self.class_names)} class names for {c} classes")


@dataclass
class EmbeddingTable:
    """Token-to-vector map; all vectors share one dimension."""

    dimension: int
    vectors: dict

    def __post_init__(self):
        if self.dimension <= 0:
            raise DataError("BAD_EMBEDDING_DIM", f"embedding dimension must be positive, got {self.dimension}")
        for token, vec in self.vectors.items():
            if len(vec) != self.dimension:
                raise DataError(
                    "BAD_EMBEDDING_ROW",
                    f"token {token!r} has a {len(vec)}-dim vector, table dimension is {self.dimension}",
                )

    def __len__(self):
        return len(self.vectors)


def one_hot_encode(labels, num_classes: int) -> np.ndarray:
    """Encode class indices as a (N, C) one-hot float32 matrix."""
    idx = np.asarray(labels, dtype=np.int64)
    bad = np.flatnonzero((idx < 0) | (idx >= num_classes))
    if bad.size:
        row = int(bad[0])
        raise DataError("INVALID_LABEL", f"row {row}: label {int(idx[row])} outside [0, {num_classes})")
    out = np.zeros((idx.size, num_classes), dtype=np.float32)
    out[np.arange(idx.size), idx] = 1.0
    return out


def min_max_scale(features: np.ndarray) -> np.ndarray:
    """Rescale each column to [0, 1]; constant columns map to all zeros."""
    x = np.asarray(features, dtype=np.float32)
    if np.isnan(x).any():
        raise DataError("NON_FINITE_FEATURE", "cannot scale features containing NaN")
    lo = x.min(axis=0)
    span = x.max(axis=0) - lo
    safe = np.where(span == 0.0, 1.0, span)
    out = (x - lo) / safe
    return np.where(span == 0.0, np.float32(0.0), out).astype(np.float32)


def standardize(features: np.ndarray) -> np.ndarray:
    """Subtract the per-feature mean and divide by the per-feature std.

    Features with std below 1e-8 are divided by 1 instead, so constant
    features come out exactly 0. Statistics are computed in float64.
    """
    x = np.asarray(features)
    mean = x.mean(axis=0, dtype=np.float64)
    std = x.std(axis=0, dtype=np.float64)
    std = np.where(std < 1e-8, 1.0, std)
    return ((x - mean) / std).astype(np.float32)


def embed_document(tokens, table: EmbeddingTable) -> np.ndarray:
    """Sum the embeddings of the tokens; tokens missing from the table are skipped."""
    out = np.zeros(table.dimension, dtype=np.float32)
    for token in tokens:
        vec = table.vectors.get(token)
        if vec is not None:
            out += vec
    return out


def class_weights(labels: np.ndarray) -> np.ndarray:
    """Balanced inverse-frequency weights w_c = N / (C * N_c).

    Raises if any class has no instances: a weight for an empty class is
    undefined, drop the class instead.
    """
    labels = np.asarray(labels)
    counts = labels.sum(axis=0, dtype=np.float64)
    if np.any(counts == 0):
        empty = int(np.argmax(counts == 0))
        raise DataError("EMPTY_CLASS", f"class {empty} has no instances; drop it from the dataset before training")
    n, c = labels.shape
    return n / (c * counts)


def _training_class_weights(labels: np.ndarray) -> np.ndarray:
    # Lenient variant for internal fits on subsets (CV folds, noisy labels)
    # where a class may be absent: absent classes get weight 0, which is
    # never consulted because no sample of that class exists.
    counts = np.asarray(labels).sum(axis=0, dtype=np.float64)
    n, c = labels.shape
    safe = np.where(counts == 0, 1.0, counts)
    return np.where(counts == 0, 0.0, n / (c * safe))


def preprocess(dataset: Dataset) -> Dataset:
    """Normalize features per dataset kind: images are standardized, numerical
    and text features are min-max scaled to [0, 1]."""
    if dataset.kind == "image":
        scaled = standardize(dataset.features)
    else:
        scaled = min_max_scale(dataset.features)
    return replace(dataset, features=scaled)
