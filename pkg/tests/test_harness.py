import json

import numpy as np
import pytest

from driftbench.errors import ParameterError, StateError
from driftbench.harness import (
    Oracle,
    RunConfig,
    default_chunk,
    run_stream,
    run_suite,
    sensitivity_sweep,
    table8_sweep,
    write_report_json,
    write_summary_csv,
    write_trace_csv,
)
from driftbench.induction import induce
from driftbench.models import TrainConfig

from conftest import make_bench16


@pytest.fixture(scope="module")
def induced_stream():
    data = make_bench16(750, 101)
    induced, _ = induce(data, "top", 0.25, 0.5, -1, 10)
    return induced


class TestOracle:
    def test_counts_unique_reveals(self):
        oracle = Oracle(np.array([1, -1, 1]))
        assert oracle.reveal(0) == 1
        assert oracle.labels_served == 1

    def test_double_reveal_rejected(self):
        oracle = Oracle(np.array([1, -1]))
        oracle.reveal(1)
        with pytest.raises(StateError):
            oracle.reveal(1)

    def test_peek_uncharged(self):
        oracle = Oracle(np.array([1, -1]))
        for _ in range(5):
            assert oracle.peek(0) == 1
        assert oracle.labels_served == 0


class TestRunConfig:
    def test_detector_validated(self):
        with pytest.raises(ParameterError):
            RunConfig(detector="adwin").validate()

    def test_fraction_validated(self):
        with pytest.raises(ParameterError):
            RunConfig(initial_fraction=1.5).validate()

    def test_default_chunk_scales(self):
        assert default_chunk(1500) == 150
        assert default_chunk(100) == 20
        assert default_chunk(100_000) == 2500


class TestRunStream:
    def test_acctr_labels_everything(self, induced_stream):
        rep = run_stream(induced_stream, RunConfig(detector="acctr", seed=1))
        assert rep.labeling_percent == 100.0
        assert rep.labels_requested == rep.stream_length - rep.warmup_length

    def test_nochange_free_and_frozen(self, induced_stream):
        rep = run_stream(induced_stream, RunConfig(detector="nochange", seed=1))
        assert rep.labeling_percent == 0.0
        assert rep.labels_requested == 0
        assert rep.events == []

    def test_nochange_below_drift_handlers(self, induced_stream):
        accs = {}
        for det in ("nochange", "md3-rs", "md3-svm", "acctr"):
            accs[det] = run_stream(induced_stream, RunConfig(detector=det, seed=1)).final_accuracy
        assert all(accs["nochange"] < accs[d] for d in ("md3-rs", "md3-svm", "acctr"))

    def test_md3_label_accounting_exact(self, induced_stream):
        rep = run_stream(induced_stream, RunConfig(detector="md3-rs", seed=1))
        decisions = rep.drifts_confirmed + rep.false_alarms
        post = rep.stream_length - rep.warmup_length
        expected = 100.0 * (rep.n_train * decisions) / post
        assert not rep.unresolved_tail
        assert rep.labeling_percent == pytest.approx(expected)
        assert rep.labeling_percent_with_warmup == pytest.approx(
            100.0 * (rep.n_train * decisions + rep.warmup_length) / rep.stream_length
        )

    def test_every_suspicion_resolved_or_tail(self, induced_stream):
        for det in ("md3-rs", "md3-svm", "acctr", "hdddm"):
            rep = run_stream(induced_stream, RunConfig(detector=det, seed=2))
            decisions = rep.drifts_confirmed + rep.false_alarms
            assert rep.suspected == decisions + (1 if rep.unresolved_tail else 0)

    def test_prediction_model_never_mutated_without_confirm(self, induced_stream):
        # prequential ordering: under nochange every prediction must equal the
        # warm-up model applied to the raw sample, for the whole stream
        from driftbench.data import apply_normalizer, fit_normalizer
        from driftbench.detectors import train_model
        from driftbench.seeding import seed_for

        config = RunConfig(detector="nochange", seed=5)
        rep = run_stream(induced_stream, config)
        warm = rep.warmup_length
        params = fit_normalizer(induced_stream.subset(np.arange(warm)))
        normalized = apply_normalizer(params, induced_stream)
        model = train_model(
            normalized.subset(np.arange(warm)),
            TrainConfig(kind="svm", C=1.0, seed=seed_for(5, "predict-model")),
        )
        preds = model.predict(normalized.X[warm:])
        truth = induced_stream.y[warm:]
        assert rep.final_accuracy == pytest.approx(float(np.mean(preds == truth)))

    def test_unresolved_tail_reported(self):
        # a drift right near the end leaves fewer than n_train samples to
        # collect: the suspicion must be flagged as an unresolved tail
        data = make_bench16(400, 7)
        induced, _ = induce(data, "top", 0.25, 0.9, -1, 10)
        rep = run_stream(induced, RunConfig(detector="md3-svm", seed=0, chunk=80))
        assert rep.unresolved_tail
        assert rep.suspected == rep.drifts_confirmed + rep.false_alarms + 1

    def test_initial_fraction_too_small(self, induced_stream):
        with pytest.raises(ParameterError):
            run_stream(induced_stream, RunConfig(detector="nochange", initial_fraction=0.005))

    def test_deterministic_reports(self, induced_stream):
        a = run_stream(induced_stream, RunConfig(detector="md3-rs", seed=3))
        b = run_stream(induced_stream, RunConfig(detector="md3-rs", seed=3))
        assert a.to_json_dict() == b.to_json_dict()
        assert np.array_equal(a.trace_metric, b.trace_metric)

    def test_md3_lr_and_uncertainty_run(self, induced_stream):
        for det in ("md3-lr", "uncertainty", "cusum", "pht"):
            rep = run_stream(induced_stream, RunConfig(detector=det, seed=0))
            assert rep.stream_length == len(induced_stream)

    def test_custom_detection_config(self, induced_stream):
        # prediction and detection models are separate: a custom ensemble
        # shape for detection must still detect the induced drift
        config = RunConfig(
            detector="md3-rs",
            seed=1,
            detection=TrainConfig(kind="ensemble", K=10, J=4),
        )
        rep = run_stream(induced_stream, config)
        assert rep.drifts_confirmed >= 1

    def test_trace_alignment(self, induced_stream):
        rep = run_stream(induced_stream, RunConfig(detector="md3-rs", seed=1))
        n_steps = rep.stream_length - rep.warmup_length
        assert len(rep.trace_steps) == n_steps
        assert len(rep.trace_accuracy) == n_steps
        assert len(rep.trace_metric) == n_steps
        for event in rep.events:
            pos = event.position - rep.warmup_length
            assert rep.trace_event[pos] == event.kind


class TestRunSuite:
    def test_cardinality_and_order(self, induced_stream):
        reports, rows = run_suite(
            [("bench", induced_stream)],
            ["nochange", "acctr", "md3-svm", "md3-rs", "hdddm"],
            RunConfig(seed=1),
        )
        assert len(reports) == 5
        assert [r["detector"] for r in rows] == ["nochange", "acctr", "md3-svm", "md3-rs", "hdddm"]

    def test_determinism(self, induced_stream):
        _, rows_a = run_suite([("d", induced_stream)], ["nochange", "md3-svm"], RunConfig(seed=4))
        _, rows_b = run_suite([("d", induced_stream)], ["nochange", "md3-svm"], RunConfig(seed=4))
        assert rows_a == rows_b

    def test_detectability_all_handlers_confirm(self, induced_stream):
        reports, _ = run_suite(
            [("bench", induced_stream)], ["acctr", "md3-svm", "md3-rs"], RunConfig(seed=1)
        )
        assert all(r.drifts_confirmed >= 1 for r in reports)

    def test_parallel_jobs_match_sequential(self, induced_stream):
        detectors = ["nochange", "md3-svm"]
        _, sequential = run_suite([("d", induced_stream)], detectors, RunConfig(seed=2), jobs=1)
        _, parallel = run_suite([("d", induced_stream)], detectors, RunConfig(seed=2), jobs=2)
        assert sequential == parallel


class TestSweeps:
    def test_table8_row_count_and_zero_row(self):
        rows, firsts = table8_sweep(i_values=range(0, 4), n_per_class=200, seed=15)
        assert len(rows) == 4
        assert rows[0]["i"] == 0
        assert rows[0]["delta_err"] == 0.0

    def test_sensitivity_false_alarms_non_increasing(self, induced_stream):
        rows = sensitivity_sweep(induced_stream, [0.0, 1.0, 2.0, 3.0], RunConfig(detector="md3-rs", seed=1))
        suspected = [r["suspected"] for r in rows]
        assert suspected == sorted(suspected, reverse=True)
        alarms = [r["false_alarms"] for r in rows]
        assert alarms == sorted(alarms, reverse=True)


class TestOutputs:
    def test_trace_csv_format(self, induced_stream, tmp_path):
        rep = run_stream(induced_stream, RunConfig(detector="md3-svm", seed=1))
        path = tmp_path / "trace.csv"
        write_trace_csv(path, rep)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "step,running_accuracy,metric_value,event"
        assert len(lines) == 1 + rep.stream_length - rep.warmup_length
        first = lines[1].split(",")
        assert len(first[1].split(".")[1]) == 6  # fixed 6 decimals

    def test_report_json_fields(self, induced_stream, tmp_path):
        rep = run_stream(induced_stream, RunConfig(detector="md3-rs", seed=1))
        path = tmp_path / "report.json"
        write_report_json(path, rep)
        doc = json.loads(path.read_text())
        for key in ("accuracy", "drifts_confirmed", "false_alarms", "labeling_percent"):
            assert key in doc

    def test_summary_csv(self, tmp_path):
        path = tmp_path / "summary.csv"
        write_summary_csv(path, [{"a": 1, "b": 0.5}])
        assert path.read_text().splitlines()[0] == "a,b"
