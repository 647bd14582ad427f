import json
from dataclasses import replace

import numpy as np
import pytest

from labelsift.detector import SuspicionRanking, rank_ascending
from labelsift.errors import ConfigurationError
from labelsift.evaluation import (
    BenchmarkError,
    alpha_precision,
    alpha_recall,
    benchmark,
    write_eval_report,
)
from labelsift.noise import NoiseRecord, flip_completely_at_random

from conftest import make_blob_dataset


def make_ranking(indices, n):
    idx = np.asarray(indices, dtype=np.int64)
    return SuspicionRanking(indices=idx, scores=np.zeros(idx.size), alpha=max(idx.size / n, 1 / n), n=n)


def make_record(flipped, n):
    flipped = np.asarray(sorted(flipped), dtype=np.int64)
    return NoiseRecord(
        flipped_indices=flipped,
        original_labels=np.zeros(flipped.size, dtype=np.int64),
        new_labels=np.ones(flipped.size, dtype=np.int64),
        mu=max(flipped.size / n, 1e-6),
        regime="completely_at_random",
        seed=0,
        n=n,
    )


class TestMetricDefinitions:
    def test_precision_example(self):
        assert alpha_precision(make_ranking([1, 4], 10), make_record([1, 2, 3], 10)) == 0.5

    def test_precision_full_overlap(self):
        assert alpha_precision(make_ranking([2, 3], 10), make_record([1, 2, 3], 10)) == 1.0

    def test_precision_disjoint(self):
        assert alpha_precision(make_ranking([5, 6], 10), make_record([1, 2, 3], 10)) == 0.0

    def test_recall_example(self):
        assert alpha_recall(make_ranking([1, 4], 10), make_record([1, 2, 3], 10)) == pytest.approx(1 / 3)

    def test_recall_identity(self):
        assert alpha_recall(make_ranking([1, 2, 3], 10), make_record([1, 2, 3], 10)) == 1.0

    def test_recall_alpha_one_is_one(self):
        record = make_record([0, 4, 7], 10)
        full = make_ranking(list(range(10)), 10)
        assert alpha_recall(full, record) == 1.0

    def test_recall_none_on_clean_data(self):
        assert alpha_recall(make_ranking([1], 10), make_record([], 10)) is None

    def test_size_mismatch_rejected(self):
        with pytest.raises(ConfigurationError):
            alpha_precision(make_ranking([1], 10), make_record([1], 20))

    def test_brute_force_oracle(self):
        rng = np.random.default_rng(0)
        for _ in range(1000):
            n = int(rng.integers(2, 200))
            k_alpha = int(rng.integers(1, n + 1))
            k_mu = int(rng.integers(1, n + 1))
            review = rng.choice(n, size=k_alpha, replace=False)
            flipped = rng.choice(n, size=k_mu, replace=False)
            ranking = make_ranking(review, n)
            record = make_record(flipped, n)
            inter = len(set(review.tolist()) & set(flipped.tolist()))
            assert alpha_precision(ranking, record) == inter / k_alpha
            assert alpha_recall(ranking, record) == inter / k_mu

    def test_equal_floor_counts_mean_precision_equals_recall(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            n = int(rng.integers(10, 300))
            k = int(rng.integers(1, n // 2 + 1))
            ranking = make_ranking(rng.choice(n, size=k, replace=False), n)
            record = make_record(rng.choice(n, size=k, replace=False), n)
            assert alpha_precision(ranking, record) == alpha_recall(ranking, record)


class TestBenchmark:
    def test_blob_benchmark_runs_and_reports(self):
        ds = make_blob_dataset(n=150, d=4, c=3, seed=0, spread=12.0)
        report = benchmark(ds, mu=0.05, alphas=[0.02, 0.05], runs=2, seed=1, workers=2, dataset_name="tiny-blobs")
        assert report.runs == 2 and report.completed_runs == 2
        assert len(report.precision_mean) == 2
        assert len(report.per_run_precision) == 2
        assert all(0.0 <= p <= 1.0 for p in report.precision_mean)
        # recall never decreases with alpha within a run
        for recalls in report.per_run_recall:
            assert recalls == sorted(recalls)
        # floor(0.05*150)=7 flips and reviews: precision == recall at alpha == mu
        for precisions, recalls in zip(report.per_run_precision, report.per_run_recall):
            assert precisions[1] == recalls[1]
        # intersection count is non-decreasing in alpha
        for precisions in report.per_run_precision:
            hits = [precisions[0] * 3, precisions[1] * 7]
            assert hits[0] <= hits[1] + 1e-12
        table = report.render_table()
        assert "tiny-blobs" in table

    def test_determinism(self):
        ds = make_blob_dataset(n=100, d=3, c=2, seed=2)
        a = benchmark(ds, mu=0.05, alphas=[0.05], runs=1, seed=3, workers=2)
        b = benchmark(ds, mu=0.05, alphas=[0.05], runs=1, seed=3, workers=2)
        assert a.per_run_precision == b.per_run_precision
        assert a.per_run_recall == b.per_run_recall
        assert a.per_run_hyperparams == b.per_run_hyperparams

    def test_fresh_noise_per_run(self):
        ds = make_blob_dataset(n=120, d=3, c=2, seed=4)
        seeds = set()
        report = benchmark(ds, mu=0.05, alphas=[0.05], runs=3, seed=5, workers=2)
        # runs completed; the per-run hyperparams list is per run
        assert len(report.per_run_hyperparams) == 3
        assert report.runtime_seconds > 0

    def test_bad_args(self):
        ds = make_blob_dataset(n=60, d=3, c=2, seed=6)
        with pytest.raises(ConfigurationError):
            benchmark(ds, runs=0)
        with pytest.raises(ConfigurationError):
            benchmark(ds, alphas=[2.0])
        with pytest.raises(ConfigurationError):
            benchmark(ds, regime="at_random", groups=None)

    def test_failed_run_attaches_partial_report(self, tmp_path):
        ds = make_blob_dataset(n=60, d=3, c=2, seed=7)
        # mu too small for any flip -> first run fails with partial results
        with pytest.raises(BenchmarkError) as excinfo:
            benchmark(ds, mu=0.001, alphas=[0.1], runs=2, seed=8, workers=1)
        partial = excinfo.value.partial_report
        assert partial.completed_runs == 0
        path = tmp_path / "partial.json"
        write_eval_report(partial, path, partial=True)
        payload = json.loads(path.read_text())
        assert payload["partial"] is True

    def test_report_json_schema(self, tmp_path):
        ds = make_blob_dataset(n=100, d=3, c=2, seed=9)
        report = benchmark(ds, mu=0.05, alphas=[0.02, 0.05], runs=1, seed=10, workers=2, dataset_name="x")
        path = tmp_path / "r.json"
        write_eval_report(report, path)
        payload = json.loads(path.read_text())
        assert payload["dataset"] == "x"
        assert payload["alphas"] == [0.02, 0.05]
        assert len(payload["precision_mean"]) == 2
        assert payload["runs"] == 1


class TestTruncationOracle:
    def test_prefix_truncation_equals_reranking(self):
        rng = np.random.default_rng(11)
        scores = rng.uniform(size=400)
        full = rank_ascending(scores, 1.0)
        record = make_record(rng.choice(400, size=12, replace=False), 400)
        for alpha in (0.01, 0.03, 0.25):
            via_truncate = full.truncate(alpha)
            via_rerank = rank_ascending(scores, alpha)
            assert alpha_precision(via_truncate, record) == alpha_precision(via_rerank, record)
            assert alpha_recall(via_truncate, record) == alpha_recall(via_rerank, record)
