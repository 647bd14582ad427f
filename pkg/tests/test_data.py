import numpy as np
import pytest

from labelsift.data import (
    Dataset,
    EmbeddingTable,
    class_weights,
    embed_document,
    min_max_scale,
    one_hot_encode,
    preprocess,
    standardize,
)
from labelsift.errors import DataError


class TestOneHot:
    def test_basic(self):
        out = one_hot_encode([1, 0], 2)
        assert out.tolist() == [[0, 1], [1, 0]]

    def test_single_row_three_classes(self):
        assert one_hot_encode([0], 3).tolist() == [[1, 0, 0]]

    def test_out_of_range_names_row(self):
        with pytest.raises(DataError, match="row 0"):
            one_hot_encode([2], 2)
        with pytest.raises(DataError, match="row 1"):
            one_hot_encode([0, -1], 2)

    def test_roundtrip_identity(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            c = int(rng.integers(2, 9))
            idx = rng.integers(0, c, size=30)
            assert np.array_equal(np.argmax(one_hot_encode(idx, c), axis=1), idx)


class TestMinMaxScale:
    def test_linear_rescale(self):
        out = min_max_scale(np.array([[2.0], [4.0], [6.0]]))
        assert out[:, 0].tolist() == [0.0, 0.5, 1.0]

    def test_constant_column_maps_to_zero(self):
        out = min_max_scale(np.array([[5.0], [5.0], [5.0]]))
        assert out[:, 0].tolist() == [0.0, 0.0, 0.0]

    def test_already_scaled(self):
        out = min_max_scale(np.array([[0.0], [1.0]]))
        assert out[:, 0].tolist() == [0.0, 1.0]

    def test_range_and_idempotence(self):
        rng = np.random.default_rng(1)
        x = rng.normal(3.0, 10.0, size=(50, 7)).astype(np.float32)
        once = min_max_scale(x)
        assert once.min() >= 0.0 and once.max() <= 1.0
        assert np.allclose(min_max_scale(once), once, atol=1e-6)

    def test_rejects_nan(self):
        with pytest.raises(DataError):
            min_max_scale(np.array([[1.0], [np.nan]]))


class TestStandardize:
    def test_two_values(self):
        out = standardize(np.array([[1.0], [3.0]]))
        assert np.allclose(out[:, 0], [-1.0, 1.0])

    def test_zero_variance_guard(self):
        out = standardize(np.array([[7.0], [7.0]]))
        assert out[:, 0].tolist() == [0.0, 0.0]

    def test_per_feature_independence(self):
        out = standardize(np.array([[0.0, 10.0], [2.0, 10.0]]))
        assert np.allclose(out, [[-1.0, 0.0], [1.0, 0.0]])

    def test_output_moments(self):
        rng = np.random.default_rng(2)
        x = rng.normal(5.0, 3.0, size=(200, 4, 4, 1)).astype(np.float32)
        out = standardize(x)
        assert np.abs(out.mean(axis=0)).max() < 1e-6
        stds = out.std(axis=0)
        assert np.all((np.abs(stds - 1.0) < 1e-4) | (stds == 0.0))


class TestEmbedDocument:
    def table(self):
        return EmbeddingTable(dimension=2, vectors={"a": np.array([1.0, 0.0]), "b": np.array([0.0, 2.0])})

    def test_sum(self):
        assert embed_document(["a", "b"], self.table()).tolist() == [1.0, 2.0]

    def test_empty_is_zero(self):
        assert embed_document([], self.table()).tolist() == [0.0, 0.0]

    def test_unknown_token_skipped(self):
        assert embed_document(["a", "unk"], self.table()).tolist() == [1.0, 0.0]

    def test_permutation_invariant_and_additive(self):
        rng = np.random.default_rng(3)
        table = EmbeddingTable(dimension=4, vectors={f"t{i}": rng.normal(size=4).astype(np.float32) for i in range(10)})
        doc_a = [f"t{i}" for i in rng.integers(0, 10, size=6)]
        doc_b = [f"t{i}" for i in rng.integers(0, 10, size=5)]
        shuffled = list(doc_a)
        rng.shuffle(shuffled)
        assert np.allclose(embed_document(doc_a, table), embed_document(shuffled, table), atol=1e-5)
        assert np.allclose(
            embed_document(doc_a + doc_b, table),
            embed_document(doc_a, table) + embed_document(doc_b, table),
            atol=1e-5,
        )

    def test_table_rejects_ragged_vectors(self):
        with pytest.raises(DataError):
            EmbeddingTable(dimension=2, vectors={"a": np.array([1.0, 2.0, 3.0])})


class TestClassWeights:
    def test_formula(self):
        labels = one_hot_encode([0, 0, 0, 1], 2)
        assert np.allclose(class_weights(labels), [4 / 6, 2.0])

    def test_balanced_is_ones(self):
        labels = one_hot_encode([0, 1, 0, 1], 2)
        assert np.allclose(class_weights(labels), [1.0, 1.0])

    def test_three_class(self):
        labels = one_hot_encode([0, 1, 2, 2], 3)
        assert np.allclose(class_weights(labels), [4 / 3, 4 / 3, 2 / 3])

    def test_weighted_counts_sum_to_n(self):
        rng = np.random.default_rng(4)
        for _ in range(20):
            c = int(rng.integers(2, 6))
            idx = np.concatenate([np.arange(c), rng.integers(0, c, size=40)])
            labels = one_hot_encode(idx, c)
            w = class_weights(labels)
            counts = labels.sum(axis=0)
            assert abs(float(w @ counts) - labels.shape[0]) < 1e-9

    def test_empty_class_raises(self):
        labels = np.array([[1.0, 0.0], [1.0, 0.0]])
        with pytest.raises(DataError, match="drop"):
            class_weights(labels)


class TestDatasetValidation:
    def test_rejects_multi_hot(self):
        with pytest.raises(DataError):
            Dataset(features=np.zeros((2, 2)), labels=np.array([[1.0, 1.0], [1.0, 0.0]]), kind="numerical")

    def test_rejects_nan_features(self):
        with pytest.raises(DataError):
            Dataset(features=np.array([[np.nan], [1.0]]), labels=np.eye(2), kind="numerical")

    def test_rejects_bad_channel_count(self):
        with pytest.raises(DataError):
            Dataset(features=np.zeros((2, 4, 4, 2)), labels=np.eye(2), kind="image")

    def test_rejects_more_classes_than_instances(self):
        with pytest.raises(DataError):
            Dataset(features=np.zeros((2, 1)), labels=np.array([[1, 0, 0], [0, 1, 0]], dtype=float), kind="numerical")


class TestPreprocess:
    def test_numerical_and_text_use_minmax(self):
        for kind in ("numerical", "text"):
            ds = Dataset(
                features=np.array([[0.0, 5.0], [10.0, 5.0], [20.0, 6.0]]),
                labels=one_hot_encode([0, 1, 0], 2),
                kind=kind,
            )
            out = preprocess(ds)
            assert out.features.min() >= 0.0 and out.features.max() <= 1.0
            assert out.kind == kind

    def test_image_uses_standardize(self):
        rng = np.random.default_rng(5)
        ds = Dataset(
            features=rng.uniform(0, 255, size=(30, 5, 5, 1)).astype(np.float32),
            labels=one_hot_encode(rng.integers(0, 2, size=30), 2),
            kind="image",
        )
        out = preprocess(ds)
        assert np.abs(out.features.mean(axis=0)).max() < 1e-5
