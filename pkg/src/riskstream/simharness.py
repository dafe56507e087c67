"""Synthetic borrower simulator and evaluation harness.

Generates labeled application streams from a ground-truth logistic model
(optionally with an abrupt mid-stream drift), runs the engine against them,
and computes the metric reports used to compare the adaptive engine with a
frozen baseline.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .domain import ApplicantEvent, ConfigError, EngineConfig, JoinError, OutcomeEvent
from .policy import DecisionKind
from .runtime import LatencySummary, PipelineResult, run_pipeline

__all__ = [
    "DriftSpec",
    "ScenarioSpec",
    "Truth",
    "GeneratedStream",
    "validate_scenario",
    "default_scenario",
    "generate_stream",
    "WindowMetrics",
    "MetricsReport",
    "evaluate",
    "truth_accuracy_windows",
    "ComparisonResult",
    "run_comparison",
]


@dataclass(frozen=True)
class DriftSpec:
    """Abrupt change of the generating truth at a given application index."""

    at_event: int
    new_intercept: float
    new_coefficients: tuple[float, ...]


@dataclass(frozen=True)
class ScenarioSpec:
    n_events: int
    feature_dim: int
    true_intercept: float
    true_coefficients: tuple[float, ...]
    feature_means: tuple[float, ...]
    feature_stds: tuple[float, ...]
    label_delay_events: int
    seed: int
    drift: DriftSpec | None = None


def validate_scenario(spec: ScenarioSpec) -> ScenarioSpec:
    n = spec.feature_dim
    if n < 1:
        raise ConfigError("feature_dim", "must be >= 1")
    if spec.n_events < 0:
        raise ConfigError("n_events", "must be >= 0")
    for key in ("true_coefficients", "feature_means", "feature_stds"):
        if len(getattr(spec, key)) != n:
            raise ConfigError(key, f"expected {n} values")
    if any(s <= 0 for s in spec.feature_stds):
        raise ConfigError("feature_stds", "all std values must be > 0")
    if spec.label_delay_events < 0:
        raise ConfigError("label_delay_events", "must be >= 0")
    if not 0 <= spec.seed < 2**64:
        raise ConfigError("seed", "must fit an unsigned 64-bit integer")
    if spec.drift is not None:
        if not 0 <= spec.drift.at_event < spec.n_events:
            raise ConfigError("drift.at_event", "must lie inside the stream")
        if len(spec.drift.new_coefficients) != n:
            raise ConfigError("drift.new_coefficients", f"expected {n} values")
    return spec


def default_scenario(
    feature_dim: int = 8,
    n_events: int = 5000,
    seed: int = 7,
    label_delay_events: int = 50,
    drift: DriftSpec | None = None,
) -> ScenarioSpec:
    """A workable stationary scenario: alternating-sign coefficients, unit Gaussians."""
    coefs = tuple(1.2 if i % 2 == 0 else -0.8 for i in range(feature_dim))
    return validate_scenario(
        ScenarioSpec(
            n_events=n_events,
            feature_dim=feature_dim,
            true_intercept=-0.3,
            true_coefficients=coefs,
            feature_means=(0.0,) * feature_dim,
            feature_stds=(1.0,) * feature_dim,
            label_delay_events=label_delay_events,
            seed=seed,
            drift=drift,
        )
    )


@dataclass(frozen=True)
class Truth:
    """Generation-time ground truth for one applicant."""

    label: int
    p_true: float
    drifted: bool


@dataclass(frozen=True, eq=False)
class GeneratedStream:
    spec: ScenarioSpec
    events: list
    truth: dict[str, Truth]
    application_ids: list[str]


def _sigmoid(z: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-np.clip(z, -700.0, 700.0)))


def generate_stream(spec: ScenarioSpec) -> GeneratedStream:
    """Draw the full labeled stream; fully determined by the scenario seed.

    Outcomes are emitted `label_delay_events` applications after their own
    application, remaining outcomes after the last application. Event times
    are the merged stream positions in milliseconds, so they are strictly
    increasing.
    """
    validate_scenario(spec)
    n = spec.n_events
    dim = spec.feature_dim
    rng = np.random.default_rng(spec.seed)
    features = rng.normal(
        loc=np.asarray(spec.feature_means),
        scale=np.asarray(spec.feature_stds),
        size=(n, dim),
    )
    uniforms = rng.random(n)

    z = features @ np.asarray(spec.true_coefficients) + spec.true_intercept
    p = _sigmoid(z)
    drifted = np.zeros(n, dtype=bool)
    if spec.drift is not None:
        z_new = features @ np.asarray(spec.drift.new_coefficients) + spec.drift.new_intercept
        p_new = _sigmoid(z_new)
        drifted[spec.drift.at_event :] = True
        p = np.where(drifted, p_new, p)
    labels = (uniforms < p).astype(int)

    events: list = []
    truth: dict[str, Truth] = {}
    ids: list[str] = []
    slot = 0
    delay = spec.label_delay_events

    def emit_outcome(j: int) -> None:
        nonlocal slot
        events.append(OutcomeEvent(ids[j], slot, int(labels[j])))
        slot += 1

    for i in range(n):
        applicant_id = f"a{i:07d}"
        ids.append(applicant_id)
        truth[applicant_id] = Truth(int(labels[i]), float(p[i]), bool(drifted[i]))
        events.append(ApplicantEvent.make(applicant_id, slot, features[i]))
        slot += 1
        if i >= delay:
            emit_outcome(i - delay)
    for j in range(max(0, n - delay), n):
        emit_outcome(j)

    return GeneratedStream(spec, events, truth, ids)


@dataclass(frozen=True)
class WindowMetrics:
    """Per tumbling-window slice of the decision sequence."""

    index: int
    n_records: int
    n_scored: int
    n_review: int
    accuracy: float | None
    log_loss: float


@dataclass(frozen=True, eq=False)
class MetricsReport:
    """Confusion metrics plus the per-window series behind the evaluation figures.

    Reject counts as the positive prediction for "defaulted"; Review decisions
    are abstentions, excluded from the confusion matrix and reported as a rate.
    """

    total_records: int
    tp: int
    fp: int
    tn: int
    fn: int
    reviews: int
    accuracy: float | None
    precision: float | None
    recall: float | None
    review_rate: float | None
    rolling: tuple[WindowMetrics, ...]
    histogram_edges: tuple[float, ...]
    histogram_repaid: tuple[int, ...]
    histogram_defaulted: tuple[int, ...]
    latency: LatencySummary | None = None
    throughput: float | None = None
    mode: str | None = None

    def to_dict(self) -> dict:
        return {
            "total_records": self.total_records,
            "confusion": {"tp": self.tp, "fp": self.fp, "tn": self.tn, "fn": self.fn},
            "reviews": self.reviews,
            "accuracy": self.accuracy,
            "precision": self.precision,
            "recall": self.recall,
            "review_rate": self.review_rate,
            "rolling": [
                {
                    "index": w.index,
                    "n_records": w.n_records,
                    "n_scored": w.n_scored,
                    "n_review": w.n_review,
                    "accuracy": w.accuracy,
                    "log_loss": w.log_loss,
                }
                for w in self.rolling
            ],
            "histogram": {
                "edges": list(self.histogram_edges),
                "repaid": list(self.histogram_repaid),
                "defaulted": list(self.histogram_defaulted),
            },
            "latency": None
            if self.latency is None
            else {
                "count": self.latency.count,
                "p50_us": self.latency.p50_us,
                "p99_us": self.latency.p99_us,
                "max_us": self.latency.max_us,
                "mean_us": self.latency.mean_us,
            },
            "throughput_per_s": self.throughput,
            "mode": self.mode,
        }


def evaluate(
    records,
    truth: dict[str, Truth],
    metric_window: int,
    clip_eps: float = 1e-6,
    histogram_bins: int = 20,
    latency: LatencySummary | None = None,
    throughput: float | None = None,
    mode: str | None = None,
) -> MetricsReport:
    """Confusion metrics, rolling windows, and score histograms for an audit."""
    tp = fp = tn = fn = reviews = 0
    pds_repaid: list[float] = []
    pds_defaulted: list[float] = []
    rolling: list[WindowMetrics] = []
    win_records = win_scored = win_correct = win_review = 0
    win_loss_total = 0.0
    lo, hi = clip_eps, 1.0 - clip_eps

    def close_window() -> None:
        nonlocal win_records, win_scored, win_correct, win_review, win_loss_total
        rolling.append(
            WindowMetrics(
                index=len(rolling),
                n_records=win_records,
                n_scored=win_scored,
                n_review=win_review,
                accuracy=win_correct / win_scored if win_scored else None,
                log_loss=win_loss_total / win_records,
            )
        )
        win_records = win_scored = win_correct = win_review = 0
        win_loss_total = 0.0

    for record in records:
        info = truth.get(record.applicant_id)
        if info is None:
            raise JoinError(record.applicant_id)
        label = info.label
        pd = record.assessment.pd
        (pds_defaulted if label else pds_repaid).append(pd)

        p = min(max(pd, lo), hi)
        win_loss_total += -(math.log(p) if label else math.log(1.0 - p))
        win_records += 1
        if record.decision is DecisionKind.REVIEW:
            reviews += 1
            win_review += 1
        else:
            predicted_default = record.decision is DecisionKind.REJECT
            win_scored += 1
            if predicted_default == bool(label):
                win_correct += 1
            if predicted_default:
                tp += label
                fp += 1 - label
            else:
                fn += label
                tn += 1 - label
        if win_records == metric_window:
            close_window()
    if win_records:
        close_window()

    scored = tp + fp + tn + fn
    total = scored + reviews
    edges = np.linspace(0.0, 1.0, histogram_bins + 1)
    hist_repaid, _ = np.histogram(pds_repaid, bins=edges)
    hist_defaulted, _ = np.histogram(pds_defaulted, bins=edges)
    return MetricsReport(
        total_records=total,
        tp=tp,
        fp=fp,
        tn=tn,
        fn=fn,
        reviews=reviews,
        accuracy=(tp + tn) / scored if scored else None,
        precision=tp / (tp + fp) if (tp + fp) else None,
        recall=tp / (tp + fn) if (tp + fn) else None,
        review_rate=reviews / total if total else None,
        rolling=tuple(rolling),
        histogram_edges=tuple(float(e) for e in edges),
        histogram_repaid=tuple(int(c) for c in hist_repaid),
        histogram_defaulted=tuple(int(c) for c in hist_defaulted),
        latency=latency,
        throughput=throughput,
        mode=mode,
    )


def truth_accuracy_windows(gen: GeneratedStream, metric_window: int) -> list[float]:
    """Accuracy of the generator's own truth model (predict default iff p > 1/2),
    per tumbling window of applications. The ceiling an online learner can chase.
    """
    out: list[float] = []
    correct = 0
    count = 0
    for applicant_id in gen.application_ids:
        info = gen.truth[applicant_id]
        if (info.p_true > 0.5) == bool(info.label):
            correct += 1
        count += 1
        if count == metric_window:
            out.append(correct / count)
            correct = 0
            count = 0
    if count:
        out.append(correct / count)
    return out


@dataclass(frozen=True, eq=False)
class ComparisonResult:
    adaptive: MetricsReport
    baseline: MetricsReport
    warmup_events: int
    stream: GeneratedStream
    adaptive_result: PipelineResult
    baseline_result: PipelineResult


def run_comparison(
    spec: ScenarioSpec,
    config: EngineConfig,
    *,
    deterministic: bool | None = None,
) -> ComparisonResult:
    """Adaptive engine vs the same pipeline frozen after a 20% warmup prefix.

    Both runs consume the identical generated stream; the baseline stops
    learning, threshold adaptation, and drift response once the warmup share
    of stream entries has passed.
    """
    if spec.feature_dim != config.feature_dim:
        raise ConfigError(
            "feature_dim",
            f"scenario dimension {spec.feature_dim} != config dimension {config.feature_dim}",
        )
    gen = generate_stream(spec)
    warmup = math.ceil(0.2 * len(gen.events))

    adaptive_result = run_pipeline(gen.events, config, deterministic=deterministic)
    baseline_result = run_pipeline(
        gen.events, config, deterministic=deterministic, freeze_after=warmup
    )

    def report(result: PipelineResult) -> MetricsReport:
        pipelined = result.stats.mode == "pipelined"
        return evaluate(
            result.records,
            gen.truth,
            config.metric_window,
            clip_eps=config.pd_clip_epsilon,
            latency=result.stats.latency_summary() if pipelined and result.stats.latency_us else None,
            throughput=result.stats.throughput if pipelined else None,
            mode=result.stats.mode,
        )

    return ComparisonResult(
        adaptive=report(adaptive_result),
        baseline=report(baseline_result),
        warmup_events=warmup,
        stream=gen,
        adaptive_result=adaptive_result,
        baseline_result=baseline_result,
    )
