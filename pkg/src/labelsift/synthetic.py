"""Bundled synthetic dataset generators for benchmarks and offline tests."""

import numpy as np
from sklearn.datasets import make_classification

from .data import Dataset, one_hot_encode
from .errors import ConfigurationError

BLOB_STD = 1.0
BLOB_SEPARATION = 10.0  # minimum center distance, in units of the cluster std


def _check_sizes(n, d, c):
    if c < 2:
        raise ConfigurationError("BAD_CLASSES", f"need at least 2 classes, got {c}")
    if d < 1:
        raise ConfigurationError("BAD_FEATURES", f"need at least 1 feature, got {d}")
    if n < c * 10:
        raise ConfigurationError("TOO_SMALL", f"need n >= 10 * classes ({c * 10}), got {n}")


def _separated_centers(rng, c, d):
    # Rejection-sample centers until all pairwise distances reach the
    # separation floor; the box grows if a candidate keeps failing.
    radius = BLOB_SEPARATION * BLOB_STD * max(1.0, c ** (1.0 / d))
    centers = []
    attempts = 0
    while len(centers) < c:
        candidate = rng.uniform(-radius, radius, size=d)
        attempts += 1
        if all(np.linalg.norm(candidate - other) >= BLOB_SEPARATION * BLOB_STD for other in centers):
            centers.append(candidate)
        elif attempts > 200:
            radius *= 1.5
            attempts = 0
    return np.array(centers)


def generate_blobs(n: int, d: int, c: int, seed: int = 0) -> Dataset:
    """Isotropic Gaussian clusters (std 1) around well-separated centers."""
    _check_sizes(n, d, c)
    rng = np.random.default_rng(seed)
    centers = _separated_centers(rng, c, d)
    sizes = np.full(c, n // c)
    sizes[: n % c] += 1
    features = np.empty((n, d), dtype=np.float32)
    labels = np.empty(n, dtype=np.int64)
    row = 0
    for cls in range(c):
        count = int(sizes[cls])
        features[row : row + count] = rng.normal(centers[cls], BLOB_STD, size=(count, d))
        labels[row : row + count] = cls
        row += count
    order = rng.permutation(n)
    return Dataset(
        features=features[order],
        labels=one_hot_encode(labels[order], c),
        kind="numerical",
        class_names=[str(i) for i in range(c)],
    )


def generate_classification(n: int, d: int, c: int, seed: int = 0) -> Dataset:
    """Clusters-of-hypercube-vertices generator with informative and
    redundant features (no generator-side label noise, so injected flips
    remain the only mislabeled instances)."""
    _check_sizes(n, d, c)
    informative = max(2, min(d, (2 * d) // 3))
    redundant = min(d - informative, max(0, d // 5))
    clusters = 2 if c * 2 <= 2 ** informative else 1
    x, y = make_classification(
        n_samples=n,
        n_features=d,
        n_informative=informative,
        n_redundant=redundant,
        n_repeated=0,
        n_classes=c,
        n_clusters_per_class=clusters,
        class_sep=2.0,
        flip_y=0.0,
        shuffle=True,
        random_state=np.random.RandomState(seed % (2 ** 32)),
    )
    return Dataset(
        features=x.astype(np.float32),
        labels=one_hot_encode(y.astype(np.int64), c),
        kind="numerical",
        class_names=[str(i) for i in range(c)],
    )


GENERATORS = {"blobs": generate_blobs, "classification": generate_classification}


def generate(kind: str, n: int, d: int, c: int, seed: int = 0) -> Dataset:
    if kind not in GENERATORS:
        raise ConfigurationError("BAD_GENERATOR", f"unknown generator {kind!r}; choose from {sorted(GENERATORS)}")
    return GENERATORS[kind](n, d, c, seed)
