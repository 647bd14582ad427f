import json

import numpy as np
import pytest

from labelsift.cli import main
from labelsift.io import load_tabular, write_tabular

from conftest import make_blob_dataset


def run(*argv):
    return main(list(argv))


def write_small_csv(tmp_path, n=60, d=3, c=2, seed=0):
    path = tmp_path / "data.csv"
    write_tabular(make_blob_dataset(n=n, d=d, c=c, seed=seed), path)
    return path


class TestGenerate:
    def test_blobs_match_requested_shape(self, tmp_path, capsys):
        out = tmp_path / "blobs.csv"
        code = run("generate", "--generator", "blobs", "--n", "400", "--d", "12", "--c", "4",
                   "--seed", "1", "--output", str(out))
        assert code == 0
        ds = load_tabular(out, "label")
        assert ds.features.shape == (400, 12)
        assert ds.num_classes == 4

    def test_classification_generator(self, tmp_path):
        out = tmp_path / "cls.csv"
        assert run("generate", "--generator", "classification", "--n", "300", "--d", "9", "--c", "3",
                   "--seed", "2", "--output", str(out)) == 0
        assert load_tabular(out, "label").features.shape == (300, 9)

    def test_same_seed_identical_files(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        run("generate", "--generator", "blobs", "--n", "150", "--d", "5", "--c", "3", "--seed", "9", "--output", str(a))
        run("generate", "--generator", "blobs", "--n", "150", "--d", "5", "--c", "3", "--seed", "9", "--output", str(b))
        assert a.read_bytes() == b.read_bytes()

    def test_infeasible_parameters_exit_1(self, tmp_path, capsys):
        code = run("generate", "--generator", "blobs", "--n", "10", "--d", "2", "--c", "5",
                   "--output", str(tmp_path / "x.csv"))
        assert code == 1
        assert "error" in capsys.readouterr().err


class TestInject:
    def test_floor_flip_count(self, tmp_path, capsys):
        labels_out = tmp_path / "noisy.txt"
        record_out = tmp_path / "record.json"
        code = run("inject", "--synthetic", "blobs", "--n", "1000", "--d", "4", "--c", "4",
                   "--mu", "0.03", "--seed", "3", "--output", str(labels_out), "--record", str(record_out))
        assert code == 0
        record = json.loads(record_out.read_text())
        assert len(record["flipped_indices"]) == 30
        assert len(labels_out.read_text().splitlines()) == 1000

    def test_at_random_needs_groups(self, tmp_path, capsys):
        code = run("inject", "--synthetic", "blobs", "--n", "100", "--d", "3", "--c", "2",
                   "--mu", "0.1", "--regime", "at-random",
                   "--output", str(tmp_path / "l.txt"), "--record", str(tmp_path / "r.json"))
        assert code == 1
        assert "MISSING_GROUPS" in capsys.readouterr().err

    def test_at_random_with_groups(self, tmp_path):
        groups = tmp_path / "groups.json"
        groups.write_text(json.dumps({"ab": ["0", "1"], "cd": ["2", "3"]}))
        record_out = tmp_path / "r.json"
        code = run("inject", "--synthetic", "blobs", "--n", "200", "--d", "3", "--c", "4",
                   "--mu", "0.1", "--regime", "at-random", "--groups", str(groups),
                   "--seed", "4", "--output", str(tmp_path / "l.txt"), "--record", str(record_out))
        assert code == 0
        record = json.loads(record_out.read_text())
        for orig, new in zip(record["original_labels"], record["new_labels"]):
            assert orig // 2 == new // 2

    def test_same_seed_identical_outputs(self, tmp_path):
        args = ["inject", "--synthetic", "blobs", "--n", "300", "--d", "3", "--c", "3",
                "--mu", "0.05", "--seed", "11"]
        run(*args, "--output", str(tmp_path / "l1.txt"), "--record", str(tmp_path / "r1.json"))
        run(*args, "--output", str(tmp_path / "l2.txt"), "--record", str(tmp_path / "r2.json"))
        assert (tmp_path / "l1.txt").read_bytes() == (tmp_path / "l2.txt").read_bytes()
        assert (tmp_path / "r1.json").read_bytes() == (tmp_path / "r2.json").read_bytes()


class TestDetect:
    def test_report_and_stdout(self, tmp_path, capsys):
        csv_path = write_small_csv(tmp_path, n=150, d=3, c=3, seed=1)
        out = tmp_path / "report.json"
        code = run("detect", "--data", str(csv_path), "--label-column", "label",
                   "--alpha", "0.01", "--seed", "7", "--threads", "2", "--output", str(out))
        assert code == 0
        report = json.loads(out.read_text())
        assert len(report["suspects"]) == 1  # floor(0.01 * 150)
        captured = capsys.readouterr().out
        assert "selected hyperparameters" in captured
        assert "top suspects" in captured

    def test_alpha_range_check_exits_1(self, tmp_path, capsys):
        csv_path = write_small_csv(tmp_path)
        code = run("detect", "--data", str(csv_path), "--label-column", "label", "--alpha", "1.5")
        assert code == 1
        assert "BAD_ALPHA" in capsys.readouterr().err

    def test_missing_file_exits_2(self, tmp_path, capsys):
        code = run("detect", "--data", str(tmp_path / "nope.csv"), "--label-column", "label", "--alpha", "0.1")
        assert code == 2

    def test_reports_identical_apart_from_runtime(self, tmp_path):
        csv_path = write_small_csv(tmp_path, seed=3)
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        args = ["detect", "--data", str(csv_path), "--label-column", "label",
                "--alpha", "0.1", "--seed", "7", "--threads", "2"]
        assert run(*args, "--output", str(a)) == 0
        assert run(*args, "--output", str(b)) == 0
        ra, rb = json.loads(a.read_text()), json.loads(b.read_text())
        ra.pop("runtime_seconds"), rb.pop("runtime_seconds")
        assert ra == rb

    def test_csv_mirror_and_cv_trace(self, tmp_path):
        csv_path = write_small_csv(tmp_path)
        mirror = tmp_path / "m.csv"
        trace = tmp_path / "t.csv"
        code = run("detect", "--data", str(csv_path), "--label-column", "label", "--alpha", "0.1",
                   "--threads", "2", "--output", str(tmp_path / "r.json"),
                   "--csv", str(mirror), "--cv-trace", str(trace))
        assert code == 0
        assert mirror.read_text().startswith("index,score,original_label")
        assert trace.read_text().startswith("point_id,depth,units,dropout,fold,f_score,mean_f_score")


class TestBenchmarkCommand:
    def test_blobs_benchmark(self, tmp_path, capsys):
        out = tmp_path / "bench.json"
        code = run("benchmark", "--synthetic", "blobs", "--n", "150", "--d", "4", "--c", "3",
                   "--mu", "0.05", "--alphas", "0.02", "0.05", "--runs", "1",
                   "--seed", "5", "--threads", "2", "--output", str(out))
        assert code == 0
        payload = json.loads(out.read_text())
        assert payload["completed_runs"] == 1
        assert len(payload["precision_mean"]) == 2
        assert "report written" in capsys.readouterr().out

    def test_zero_runs_exit_1(self, tmp_path, capsys):
        code = run("benchmark", "--synthetic", "blobs", "--n", "100", "--d", "3", "--c", "2",
                   "--runs", "0", "--output", str(tmp_path / "b.json"))
        assert code == 1

    def test_default_protocol_values(self):
        from labelsift.cli import build_parser

        args = build_parser().parse_args(["benchmark", "--synthetic", "blobs"])
        assert args.alphas == [0.01, 0.02, 0.03]
        assert args.mu == 0.03
        assert args.runs == 5

    def test_failed_run_dumps_partial_and_exits_nonzero(self, tmp_path, capsys):
        out = tmp_path / "bench.json"
        code = run("benchmark", "--synthetic", "blobs", "--n", "100", "--d", "3", "--c", "2",
                   "--mu", "0.001", "--runs", "2", "--output", str(out))
        assert code != 0
        payload = json.loads(out.read_text())
        assert payload["partial"] is True


class TestInspectAndUsage:
    def test_inspect_summary(self, tmp_path, capsys):
        csv_path = write_small_csv(tmp_path, n=80, c=2)
        assert run("inspect", "--data", str(csv_path), "--label-column", "label") == 0
        out = capsys.readouterr().out
        assert "kind: numerical" in out
        assert "instances: 80" in out
        assert "classes: 2" in out

    def test_unknown_flag_exits_1(self, capsys):
        assert run("detect", "--frobnicate") == 1
        assert "error USAGE" in capsys.readouterr().err

    def test_two_input_styles_rejected(self, tmp_path, capsys):
        csv_path = write_small_csv(tmp_path)
        code = run("inspect", "--data", str(csv_path), "--label-column", "label",
                   "--synthetic", "blobs")
        assert code == 1
        assert "exactly one input style" in capsys.readouterr().err

    def test_exit_status_mapping(self):
        from labelsift.errors import ConfigurationError, DataError, TrainingError

        assert ConfigurationError("X", "x").exit_status == 1
        assert DataError("X", "x").exit_status == 2
        assert TrainingError("X", "x").exit_status == 3

    def test_env_var_overrides_thread_flag(self, monkeypatch):
        import argparse

        from labelsift.cli import _workers

        monkeypatch.setenv("LABELSIFT_THREADS", "1")
        assert _workers(argparse.Namespace(threads=4)) == 1
        monkeypatch.delenv("LABELSIFT_THREADS")
        assert _workers(argparse.Namespace(threads=4)) == 4
