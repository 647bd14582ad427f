import numpy as np
import pytest

from labelsift.data import Dataset, one_hot_encode


def make_blob_dataset(n=120, d=4, c=3, seed=0, spread=8.0, kind="numerical"):
    """Well-separated Gaussian clusters; small and fast for unit tests."""
    rng = np.random.default_rng(seed)
    centers = rng.normal(0.0, spread, size=(c, d))
    labels = rng.integers(0, c, size=n)
    # every class needs at least a few members
    labels[:c] = np.arange(c)
    features = centers[labels] + rng.normal(0.0, 1.0, size=(n, d))
    return Dataset(
        features=features.astype(np.float32),
        labels=one_hot_encode(labels, c),
        kind=kind,
        class_names=[str(i) for i in range(c)],
    )


@pytest.fixture
def blob_dataset():
    return make_blob_dataset()
