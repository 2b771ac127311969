"""Prequential stream evaluation with oracle-priced labeling.

A run trains prediction and detection models on the initial labeled fraction
of the stream, then walks the remainder one sample at a time: predict, score
the prediction against the oracle's ground truth for the accuracy trace (an
evaluation-only lookup that is not charged to the label budget), and feed the
detector its signal. A suspected drift routes the next n_train oracle labels
(charged) into a confirmation buffer; a confirmed accuracy drop retrains both
models on the buffer, a false alarm leaves them untouched. Either way a fresh
reference distribution is computed from the buffer and installed before the
walk resumes.
"""

from __future__ import annotations

import concurrent.futures
import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .data import Dataset, apply_normalizer, fit_normalizer
from .detectors import (
    CONFIRMED,
    CusumTracker,
    DriftEvent,
    EwmaTracker,
    FALSE_ALARM,
    HellingerDetector,
    MarginDensityDetector,
    PageHinkleyTracker,
    SUSPECTED,
    UncertaintyTracker,
    hellinger_between,
    reference_from_bands,
    reference_from_cv,
    train_model,
)
from .errors import ParameterError, StateError
from .margins import (
    ENSEMBLE_DISAGREEMENT,
    MarginSpec,
    PROBABILISTIC_CONFIDENCE,
    SVM_GEOMETRIC,
    margin_density,
    margin_signal,
    sample_uncertainty,
)
from .models import TrainConfig, train_subspace_ensemble
from .seeding import seed_for
from .synth import ScenarioId, generate_scenario

DETECTORS = (
    "nochange",
    "acctr",
    "md3-svm",
    "md3-rs",
    "md3-lr",
    "hdddm",
    "cusum",
    "pht",
    "uncertainty",
)

#: sweep seed calibrated so the 20-dimensional first-detection table is stable
DEFAULT_TABLE8_SEED = 15

#: a metric delta larger than this counts as a detection in sweep tables
DETECTION_DELTA = 0.05


def default_chunk(stream_length: int) -> int:
    """Roughly a tenth of the stream, clamped to a sane range."""
    return int(min(max(round(0.1 * stream_length), 20), 2500))


def _default_prediction() -> TrainConfig:
    return TrainConfig(kind="svm", C=1.0)


@dataclass
class RunConfig:
    detector: str = "md3-rs"
    chunk: int | None = None
    n_train: int | None = None
    theta: float = 2.0
    theta_margin: float = 0.5
    initial_fraction: float = 0.15
    cv_folds: int = 5
    seed: int = 0
    prediction: TrainConfig = field(default_factory=_default_prediction)
    detection: TrainConfig | None = None
    cusum_v: float = 0.005
    normalize: bool = True

    def validate(self) -> None:
        if self.detector not in DETECTORS:
            raise ParameterError(
                f"unknown detector {self.detector!r}; valid: {', '.join(DETECTORS)}"
            )
        if not 0.0 < self.initial_fraction < 1.0:
            raise ParameterError(
                f"initial_fraction must be in (0, 1), got {self.initial_fraction}"
            )
        if self.theta < 0:
            raise ParameterError(f"theta must be >= 0, got {self.theta}")
        if self.chunk is not None and self.chunk < 10:
            raise ParameterError(f"chunk size must be >= 10, got {self.chunk}")

    def resolved_detection(self) -> TrainConfig | None:
        """Detection-model config for the chosen detector."""
        if self.detection is not None:
            return self.detection
        if self.detector == "md3-svm":
            return TrainConfig(kind="svm", C=self.prediction.C)
        if self.detector in ("md3-rs", "uncertainty"):
            return TrainConfig(kind="ensemble", base="tree", K=20, J=None)
        if self.detector == "md3-lr":
            return TrainConfig(kind="logistic", penalty="l2", strength=1e-4)
        return None


class Oracle:
    """Label provider with a budget counter.

    ``reveal`` charges the budget and may be called at most once per
    instance. ``peek`` is the uncharged evaluation-only lookup used for the
    accuracy trace.
    """

    def __init__(self, y: np.ndarray):
        self._y = np.asarray(y)
        self._revealed = np.zeros(len(self._y), dtype=bool)
        self.labels_served = 0

    def reveal(self, i: int) -> int:
        if self._revealed[i]:
            raise StateError(f"label for instance {i} was already requested")
        self._revealed[i] = True
        self.labels_served += 1
        return int(self._y[i])

    def peek(self, i: int) -> int:
        return int(self._y[i])


@dataclass
class RunReport:
    detector: str
    seed: int
    stream_length: int
    warmup_length: int
    chunk: int
    n_train: int
    final_accuracy: float
    drifts_confirmed: int
    false_alarms: int
    suspected: int
    labels_requested: int
    labeling_percent: float
    labeling_percent_with_warmup: float
    unresolved_tail: bool
    events: list
    decisions: list  # [{"suspected_at", "decided_at", "kind"}]
    trace_steps: np.ndarray
    trace_accuracy: np.ndarray
    trace_metric: np.ndarray
    trace_event: list

    def to_json_dict(self) -> dict:
        return {
            "detector": self.detector,
            "seed": self.seed,
            "stream_length": self.stream_length,
            "warmup_length": self.warmup_length,
            "chunk": self.chunk,
            "n_train": self.n_train,
            "accuracy": round(self.final_accuracy, 6),
            "drifts_confirmed": self.drifts_confirmed,
            "false_alarms": self.false_alarms,
            "suspected": self.suspected,
            "labels_requested": self.labels_requested,
            "labeling_percent": round(self.labeling_percent, 6),
            "labeling_percent_with_warmup": round(self.labeling_percent_with_warmup, 6),
            "unresolved_tail": self.unresolved_tail,
            "events": [
                {
                    "position": e.position,
                    "kind": e.kind,
                    "metric": round(e.metric, 6),
                    "labels_used": e.labels_used,
                }
                for e in self.events
            ],
            "decisions": self.decisions,
        }


def _decision_kind(reference, theta, buffer_accuracy) -> str:
    drop = reference.acc_ref - buffer_accuracy
    return CONFIRMED if drop > theta * reference.sigma_acc else FALSE_ALARM


def run_stream(data: Dataset, config: RunConfig) -> RunReport:
    """Run one detector over one labeled stream and account for everything."""
    config.validate()
    y_all = data.require_labels()
    n = len(data)
    warm = int(n * config.initial_fraction)
    if warm < 2 * config.cv_folds:
        raise ParameterError(
            f"initial fraction yields {warm} training samples, "
            f"need at least {2 * config.cv_folds} for {config.cv_folds}-fold references"
        )
    chunk = config.chunk if config.chunk is not None else default_chunk(n)
    n_train = config.n_train if config.n_train is not None else chunk
    lam = (chunk - 1) / chunk

    if config.normalize:
        params = fit_normalizer(data.subset(np.arange(warm)))
        data = apply_normalizer(params, data)

    warm_data = data.subset(np.arange(warm))
    oracle = Oracle(y_all)

    pred_cfg = config.prediction
    detect_cfg = config.resolved_detection()
    prediction_model = train_model(
        warm_data, _seeded(pred_cfg, seed_for(config.seed, "predict-model"))
    )

    detector_kind = config.detector
    spec = None
    detect_model = None
    md3 = None
    tracker = None
    hd = None
    mu0 = 0.0

    if detector_kind.startswith("md3"):
        spec = MarginSpec(
            {
                "md3-svm": SVM_GEOMETRIC,
                "md3-rs": ENSEMBLE_DISAGREEMENT,
                "md3-lr": PROBABILISTIC_CONFIDENCE,
            }[detector_kind],
            config.theta_margin,
        )
        detect_model = train_model(
            warm_data, _seeded(detect_cfg, seed_for(config.seed, "detect-model"))
        )
        reference = reference_from_cv(
            warm_data,
            detect_cfg,
            spec,
            k=config.cv_folds,
            seed=seed_for(config.seed, "reference"),
            predict_config=pred_cfg,
        )
        md3 = MarginDensityDetector(reference, lam, config.theta, n_train)
    elif detector_kind == "uncertainty":
        detect_model = train_model(
            warm_data, _seeded(detect_cfg, seed_for(config.seed, "detect-model"))
        )
        reference = reference_from_cv(
            warm_data,
            detect_cfg,
            None,
            k=config.cv_folds,
            seed=seed_for(config.seed, "reference"),
            predict_config=pred_cfg,
            metric="uncertainty",
        )
        tracker = UncertaintyTracker(reference.md_ref, reference.sigma_md, lam, config.theta)
    else:
        reference = reference_from_cv(
            warm_data,
            pred_cfg,
            None,
            k=config.cv_folds,
            seed=seed_for(config.seed, "reference"),
            metric="none",
        )
        if detector_kind == "acctr":
            mu0 = 1.0 - reference.acc_ref
            tracker = EwmaTracker(mu0, reference.sigma_acc, lam, config.theta)
        elif detector_kind == "cusum":
            mu0 = 1.0 - reference.acc_ref
            tracker = CusumTracker(config.cusum_v, config.theta)
        elif detector_kind == "pht":
            mu0 = 1.0 - reference.acc_ref
            tracker = PageHinkleyTracker(config.cusum_v, config.theta)
        elif detector_kind == "hdddm":
            hd = HellingerDetector(warm_data.X, chunk, config.theta)

    acc_run = reference.acc_ref
    correct_sum = 0
    events: list[DriftEvent] = []
    decisions: list[dict] = []
    collecting = False
    suspect_pos = -1
    buf_x: list = []
    buf_y: list = []
    buf_correct: list = []
    decision_count = 0

    steps = np.arange(warm, n)
    trace_acc = np.empty(len(steps))
    trace_metric = np.empty(len(steps))
    trace_event = [""] * len(steps)

    def detector_metric() -> float:
        if md3 is not None:
            return md3.metric
        if tracker is not None:
            return tracker.metric
        if hd is not None:
            return hd.metric
        return 0.0

    for pos, t in enumerate(steps):
        x = data.X[t]
        pred = int(prediction_model.predict(x.reshape(1, -1))[0])
        truth = oracle.peek(t)
        correct = pred == truth
        correct_sum += correct
        acc_run = lam * acc_run + (1.0 - lam) * correct
        event_label = ""

        if collecting:
            label = oracle.reveal(t)
            if md3 is not None:
                decision = md3.feed_label(x, label, correct)
            else:
                buf_x.append(x)
                buf_y.append(label)
                buf_correct.append(correct)
                decision = None
                if len(buf_y) == n_train:
                    decision = _decision_kind(reference, config.theta, float(np.mean(buf_correct)))
            if decision is not None:
                if md3 is not None:
                    buffer_ds = md3.buffer_dataset(data.feature_names)
                    buffer_acc = md3.buffer_accuracy
                else:
                    buffer_ds = Dataset(np.vstack(buf_x), np.asarray(buf_y), data.feature_names)
                    buffer_acc = float(np.mean(buf_correct))
                if decision == CONFIRMED:
                    prediction_model = train_model(
                        buffer_ds,
                        _seeded(pred_cfg, seed_for(config.seed, "retrain-predict", decision_count)),
                    )
                    if detect_model is not None:
                        detect_model = train_model(
                            buffer_ds,
                            _seeded(detect_cfg, seed_for(config.seed, "retrain-detect", decision_count)),
                        )
                    reference = _recompute_reference(
                        buffer_ds, config, pred_cfg, detect_cfg, spec, decision_count
                    )
                else:
                    # models stay deployed; the fresh reference must describe
                    # them, so fold bands are evaluation-only here
                    reference = reference_from_bands(
                        buffer_ds,
                        prediction_model,
                        detect_model,
                        spec,
                        k=config.cv_folds,
                        metric=_reference_metric(detector_kind),
                    )
                if md3 is not None:
                    md3.install_reference(reference)
                elif detector_kind == "uncertainty":
                    tracker.reset(reference.md_ref, reference.sigma_md)
                elif detector_kind == "acctr":
                    mu0 = 1.0 - reference.acc_ref
                    tracker.reset(mu0, reference.sigma_acc)
                elif detector_kind in ("cusum", "pht"):
                    mu0 = 1.0 - reference.acc_ref
                    tracker.reset()
                elif detector_kind == "hdddm":
                    hd.rebuild(buffer_ds.X)
                decisions.append(
                    {"suspected_at": suspect_pos, "decided_at": int(t), "kind": decision}
                )
                events.append(DriftEvent(int(t), decision, buffer_acc, oracle.labels_served))
                event_label = decision
                decision_count += 1
                collecting = False
                buf_x, buf_y, buf_correct = [], [], []
        elif detector_kind != "nochange":
            if md3 is not None:
                sig = margin_signal(detect_model, spec, x)
                suspected = md3.step(sig) == SUSPECTED
            elif detector_kind == "acctr":
                oracle.reveal(t)
                suspected = tracker.step(0.0 if correct else 1.0)
            elif detector_kind in ("cusum", "pht"):
                oracle.reveal(t)
                suspected = tracker.step((0.0 if correct else 1.0) - mu0)
            elif detector_kind == "hdddm":
                suspected = hd.step(x)
            else:  # uncertainty
                u = float(sample_uncertainty(detect_model, x.reshape(1, -1))[0])
                suspected = tracker.step(u)
            if suspected:
                suspect_pos = int(t)
                events.append(DriftEvent(int(t), SUSPECTED, detector_metric(), oracle.labels_served))
                event_label = SUSPECTED
                collecting = True
                buf_x, buf_y, buf_correct = [], [], []

        trace_acc[pos] = acc_run
        trace_metric[pos] = detector_metric()
        trace_event[pos] = event_label

    post_len = n - warm
    confirmed = sum(1 for d in decisions if d["kind"] == CONFIRMED)
    false_alarms = sum(1 for d in decisions if d["kind"] == FALSE_ALARM)
    return RunReport(
        detector=detector_kind,
        seed=config.seed,
        stream_length=n,
        warmup_length=warm,
        chunk=chunk,
        n_train=n_train,
        final_accuracy=correct_sum / post_len,
        drifts_confirmed=confirmed,
        false_alarms=false_alarms,
        suspected=sum(1 for e in events if e.kind == SUSPECTED),
        labels_requested=oracle.labels_served,
        labeling_percent=100.0 * oracle.labels_served / post_len,
        labeling_percent_with_warmup=100.0 * (oracle.labels_served + warm) / n,
        unresolved_tail=collecting,
        events=events,
        decisions=decisions,
        trace_steps=steps,
        trace_accuracy=trace_acc,
        trace_metric=trace_metric,
        trace_event=trace_event,
    )


def _seeded(config: TrainConfig, seed: int) -> TrainConfig:
    cfg = TrainConfig(**vars(config))
    cfg.seed = seed
    return cfg


def _reference_metric(detector_kind: str) -> str:
    if detector_kind.startswith("md3"):
        return "margin_density"
    if detector_kind == "uncertainty":
        return "uncertainty"
    return "none"


def _recompute_reference(buffer_ds, config, pred_cfg, detect_cfg, spec, decision_count):
    ref_seed = seed_for(config.seed, "retrain-reference", decision_count)
    if config.detector.startswith("md3"):
        return reference_from_cv(
            buffer_ds, detect_cfg, spec, k=config.cv_folds, seed=ref_seed,
            predict_config=pred_cfg,
        )
    if config.detector == "uncertainty":
        return reference_from_cv(
            buffer_ds, detect_cfg, None, k=config.cv_folds, seed=ref_seed,
            predict_config=pred_cfg, metric="uncertainty",
        )
    return reference_from_cv(
        buffer_ds, pred_cfg, None, k=config.cv_folds, seed=ref_seed, metric="none"
    )


# ---------------------------------------------------------------------------
# suites and sweeps


def _clone_config(config: RunConfig, **overrides) -> RunConfig:
    kwargs = dict(vars(config))
    kwargs["prediction"] = TrainConfig(**vars(config.prediction))
    if config.detection is not None:
        kwargs["detection"] = TrainConfig(**vars(config.detection))
    kwargs.update(overrides)
    return RunConfig(**kwargs)


def _run_suite_task(args):
    name, data, detector, config = args
    report = run_stream(data, _clone_config(config, detector=detector, detection=None))
    return name, report


def run_suite(datasets, detectors, config: RunConfig, jobs: int = 1):
    """Cross product of datasets x detectors; returns (reports, summary rows).

    ``datasets`` is a list of (name, Dataset) pairs. Reports are merged in
    deterministic (dataset, detector) order regardless of ``jobs``.
    """
    tasks = [
        (name, data, detector, config)
        for name, data in datasets
        for detector in detectors
    ]
    if jobs > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_suite_task, tasks))
    else:
        results = [_run_suite_task(t) for t in tasks]
    reports = [r for _, r in results]
    rows = [
        {
            "dataset": name,
            "detector": r.detector,
            "accuracy_percent": round(100.0 * r.final_accuracy, 6),
            "drifts_confirmed": r.drifts_confirmed,
            "false_alarms": r.false_alarms,
            "labeling_percent": round(r.labeling_percent, 6),
        }
        for name, r in results
    ]
    return reports, rows


def table8_sweep(
    i_values=None,
    n_per_class: int = 500,
    seed: int = DEFAULT_TABLE8_SEED,
    theta_margin: float = 0.5,
):
    """Metric deltas between the pre- and post-drift halves of the hd20 streams.

    One ensemble is trained per drift level on the (identical) pre-drift
    half; the table reports |delta error|, |delta margin density|, |delta
    mean uncertainty| and the normalized Hellinger distance, plus the first
    drift level at which each metric moves by more than DETECTION_DELTA.
    """
    if i_values is None:
        i_values = range(0, 16)
    rows = []
    for i in i_values:
        ds = generate_scenario(ScenarioId("hd20", i), n_per_class, seed_for(seed, "data"))
        half = len(ds) // 2
        pre = ds.subset(np.arange(half))
        post = ds.subset(np.arange(half, len(ds)))
        model = train_subspace_ensemble(
            pre, TrainConfig(kind="ensemble", K=20, J=None, seed=seed_for(seed, "model"))
        )
        spec = MarginSpec(ENSEMBLE_DISAGREEMENT, theta_margin)
        err_pre = float(np.mean(model.predict(pre.X) != pre.y))
        err_post = float(np.mean(model.predict(post.X) != post.y))
        md_pre = margin_density(model, spec, pre)
        md_post = margin_density(model, spec, post)
        u_pre = float(sample_uncertainty(model, pre.X).mean())
        u_post = float(sample_uncertainty(model, post.X).mean())
        bins = math.ceil(math.sqrt(half))
        hd = hellinger_between(pre.X, post.X, bins) / math.sqrt(2.0)
        rows.append(
            {
                "i": int(i),
                "delta_err": abs(err_post - err_pre),
                "delta_md": abs(md_post - md_pre),
                "delta_uncertain": abs(u_post - u_pre),
                "delta_hd": hd,
            }
        )

    def first_detection(key):
        for row in rows:
            if row["i"] >= 1 and row[key] > DETECTION_DELTA:
                return row["i"]
        return None

    firsts = {
        "err": first_detection("delta_err"),
        "md": first_detection("delta_md"),
        "uncertain": first_detection("delta_uncertain"),
        "hd": first_detection("delta_hd"),
    }
    return rows, firsts


def margin_width_sweep(data: Dataset, values, config: RunConfig):
    """Run the margin-density detector at several margin widths."""
    rows = []
    for theta_margin in values:
        report = run_stream(data, _clone_config(config, theta_margin=float(theta_margin)))
        rows.append(
            {
                "theta_margin": float(theta_margin),
                "accuracy_percent": round(100.0 * report.final_accuracy, 6),
                "drifts_confirmed": report.drifts_confirmed,
                "false_alarms": report.false_alarms,
                "labeling_percent": round(report.labeling_percent, 6),
            }
        )
    return rows


def sensitivity_sweep(data: Dataset, values, config: RunConfig):
    """Run the detector at several sensitivity thresholds theta."""
    rows = []
    for theta in values:
        report = run_stream(data, _clone_config(config, theta=float(theta)))
        rows.append(
            {
                "theta": float(theta),
                "accuracy_percent": round(100.0 * report.final_accuracy, 6),
                "drifts_confirmed": report.drifts_confirmed,
                "false_alarms": report.false_alarms,
                "suspected": report.suspected,
                "labeling_percent": round(report.labeling_percent, 6),
            }
        )
    return rows


# ---------------------------------------------------------------------------
# file outputs (all numbers fixed to 6 decimals for diffability)


def write_trace_csv(path, report: RunReport) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step", "running_accuracy", "metric_value", "event"])
        for i in range(len(report.trace_steps)):
            writer.writerow(
                [
                    int(report.trace_steps[i]),
                    f"{report.trace_accuracy[i]:.6f}",
                    f"{report.trace_metric[i]:.6f}",
                    report.trace_event[i],
                ]
            )


def write_report_json(path, report: RunReport) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report.to_json_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_summary_csv(path, rows: list[dict]) -> None:
    if not rows:
        raise ParameterError("no summary rows to write")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        for row in rows:
            writer.writerow(
                {
                    k: (f"{v:.6f}" if isinstance(v, float) else v)
                    for k, v in row.items()
                }
            )
