import math

import numpy as np
import pytest

from riskstream.domain import ApplicantEvent, ConfigError, JoinError, OutcomeEvent, default_config
from riskstream.policy import DecisionKind
from riskstream.runtime import DecisionRecord
from riskstream.scoring import AttributionVector, RiskAssessment
from riskstream.simharness import (
    DriftSpec,
    ScenarioSpec,
    Truth,
    default_scenario,
    evaluate,
    generate_stream,
    run_comparison,
    truth_accuracy_windows,
    validate_scenario,
)


class TestGenerateStream:
    def test_empty(self):
        spec = default_scenario(feature_dim=2, n_events=0)
        gen = generate_stream(spec)
        assert gen.events == []
        assert gen.truth == {}

    def test_deterministic_given_seed(self):
        spec = default_scenario(feature_dim=3, n_events=200, seed=99)
        a = generate_stream(spec)
        b = generate_stream(spec)
        assert len(a.events) == len(b.events)
        for ea, eb in zip(a.events, b.events):
            if isinstance(ea, ApplicantEvent):
                assert np.array_equal(ea.raw_features, eb.raw_features)
            else:
                assert ea == eb

    def test_calibration_against_closed_form(self):
        # logistic(-ln 3) = 0.25 exactly
        spec = ScenarioSpec(
            n_events=10_000,
            feature_dim=2,
            true_intercept=-math.log(3.0),
            true_coefficients=(0.0, 0.0),
            feature_means=(0.0, 0.0),
            feature_stds=(1.0, 1.0),
            label_delay_events=10,
            seed=123,
        )
        gen = generate_stream(spec)
        rate = sum(t.label for t in gen.truth.values()) / len(gen.truth)
        assert abs(rate - 0.25) < 0.03

    def test_outcome_labels_match_truth(self):
        spec = default_scenario(feature_dim=2, n_events=300, seed=6)
        gen = generate_stream(spec)
        for event in gen.events:
            if isinstance(event, OutcomeEvent):
                assert event.label == gen.truth[event.applicant_id].label

    def test_times_non_decreasing_and_outcomes_after_applications(self):
        spec = default_scenario(feature_dim=2, n_events=150, seed=6, label_delay_events=7)
        gen = generate_stream(spec)
        app_time = {}
        last = -1
        outcomes = 0
        for event in gen.events:
            t = event.event_time_ms if isinstance(event, ApplicantEvent) else event.outcome_time_ms
            assert t >= last
            last = t
            if isinstance(event, ApplicantEvent):
                app_time[event.applicant_id] = event.event_time_ms
            else:
                outcomes += 1
                assert event.outcome_time_ms >= app_time[event.applicant_id]
        assert outcomes == 150

    def test_zero_delay(self):
        spec = default_scenario(feature_dim=2, n_events=10, seed=1, label_delay_events=0)
        gen = generate_stream(spec)
        kinds = ["app" if isinstance(e, ApplicantEvent) else "out" for e in gen.events]
        assert kinds == ["app", "out"] * 10

    def test_drift_switches_truth(self):
        spec = default_scenario(
            feature_dim=2,
            n_events=100,
            seed=3,
            drift=DriftSpec(at_event=50, new_intercept=0.0, new_coefficients=(-1.2, 0.8)),
        )
        gen = generate_stream(spec)
        drifted = [gen.truth[i].drifted for i in gen.application_ids]
        assert drifted == [False] * 50 + [True] * 50

    def test_scenario_validation(self):
        import dataclasses

        bad = dataclasses.replace(default_scenario(feature_dim=2), feature_stds=(1.0, 0.0))
        with pytest.raises(ConfigError) as exc:
            validate_scenario(bad)
        assert exc.value.key == "feature_stds"

    def test_drift_index_bounds(self):
        with pytest.raises(ConfigError) as exc:
            validate_scenario(
                default_scenario(
                    feature_dim=2,
                    n_events=10,
                    drift=DriftSpec(at_event=10, new_intercept=0.0, new_coefficients=(0.0, 0.0)),
                )
            )
        assert exc.value.key == "drift.at_event"


def record(applicant_id, decision, pd=0.5):
    assessment = RiskAssessment(
        applicant_id=applicant_id,
        pd=pd,
        confidence=1.0,
        attributions=AttributionVector((0.0,), (0,)),
        params_version=0,
        scored_at_ms=0,
    )
    return DecisionRecord(
        applicant_id=applicant_id,
        decision=decision,
        assessment=assessment,
        tau_used=0.5,
        band_used=0.0,
        ingress_seq=0,
        latency_us=0,
        decided_at_ms=0,
        explanation=((0, 0.0),),
    )


def truth_for(labels):
    return {key: Truth(label, float(label), False) for key, label in labels.items()}


class TestEvaluate:
    def test_perfect_separation(self):
        records = [record("a", DecisionKind.REJECT, 0.9), record("b", DecisionKind.APPROVE, 0.1)]
        report = evaluate(records, truth_for({"a": 1, "b": 0}), metric_window=10)
        assert report.accuracy == 1.0
        assert report.recall == 1.0
        assert report.precision == 1.0

    def test_counting_oracle(self):
        labels = {}
        records = []
        i = 0

        def add(decision, label, n):
            nonlocal i
            for _ in range(n):
                key = f"r{i}"
                records.append(record(key, decision, 0.9 if decision is DecisionKind.REJECT else 0.1))
                labels[key] = label
                i += 1

        add(DecisionKind.REJECT, 1, 2)   # TP
        add(DecisionKind.REJECT, 0, 1)   # FP
        add(DecisionKind.APPROVE, 0, 6)  # TN
        add(DecisionKind.APPROVE, 1, 1)  # FN
        report = evaluate(records, truth_for(labels), metric_window=100)
        assert (report.tp, report.fp, report.tn, report.fn) == (2, 1, 6, 1)
        assert report.accuracy == pytest.approx(0.8)
        assert report.precision == pytest.approx(2 / 3)
        assert report.recall == pytest.approx(2 / 3)

    def test_all_review_undefined_metrics(self):
        records = [record(f"r{i}", DecisionKind.REVIEW) for i in range(4)]
        report = evaluate(records, truth_for({f"r{i}": i % 2 for i in range(4)}), metric_window=2)
        assert report.accuracy is None
        assert report.precision is None
        assert report.recall is None
        assert report.review_rate == 1.0
        assert all(w.accuracy is None for w in report.rolling)

    def test_join_error_on_unknown_id(self):
        with pytest.raises(JoinError):
            evaluate([record("mystery", DecisionKind.APPROVE)], {}, metric_window=10)

    def test_rolling_windows_chunked(self):
        records = [record(f"r{i}", DecisionKind.APPROVE, 0.1) for i in range(5)]
        report = evaluate(records, truth_for({f"r{i}": 0 for i in range(5)}), metric_window=2)
        assert [w.n_records for w in report.rolling] == [2, 2, 1]
        assert report.rolling[0].accuracy == 1.0

    def test_histogram_splits_by_true_class(self):
        records = [record("a", DecisionKind.APPROVE, 0.04), record("b", DecisionKind.REJECT, 0.96)]
        report = evaluate(records, truth_for({"a": 0, "b": 1}), metric_window=10)
        assert sum(report.histogram_repaid) == 1
        assert sum(report.histogram_defaulted) == 1
        assert report.histogram_repaid[0] == 1
        assert report.histogram_defaulted[-1] == 1


class TestTruthAccuracy:
    def test_windows_shape(self):
        gen = generate_stream(default_scenario(feature_dim=2, n_events=250, seed=1))
        windows = truth_accuracy_windows(gen, 100)
        assert len(windows) == 3
        assert all(0.0 <= w <= 1.0 for w in windows)


class TestRunComparison:
    def test_dimension_mismatch_rejected(self):
        spec = default_scenario(feature_dim=3, n_events=10)
        with pytest.raises(ConfigError):
            run_comparison(spec, default_config(2))

    def test_empty_scenario_two_empty_reports(self):
        spec = default_scenario(feature_dim=2, n_events=0)
        comparison = run_comparison(spec, default_config(2))
        assert comparison.adaptive.total_records == 0
        assert comparison.baseline.total_records == 0

    def test_baseline_frozen_after_warmup(self):
        spec = default_scenario(feature_dim=2, n_events=500, seed=10, label_delay_events=20)
        config = default_config(2, metric_window=25)
        comparison = run_comparison(spec, config)
        baseline_versions = {
            r.assessment.params_version for r in comparison.baseline_result.records
        }
        adaptive_versions = {
            r.assessment.params_version for r in comparison.adaptive_result.records
        }
        assert max(adaptive_versions) > max(baseline_versions) or len(adaptive_versions) > len(
            baseline_versions
        )
        assert comparison.warmup_events == math.ceil(0.2 * len(comparison.stream.events))

    def test_stationary_convergence_within_two_points(self):
        spec = default_scenario(feature_dim=4, n_events=6000, seed=17, label_delay_events=40)
        config = default_config(4, metric_window=200)
        comparison = run_comparison(spec, config)
        quartile = max(1, len(comparison.adaptive.rolling) // 4)
        adaptive_tail = [
            w.accuracy for w in comparison.adaptive.rolling[-quartile:] if w.accuracy is not None
        ]
        baseline_tail = [
            w.accuracy for w in comparison.baseline.rolling[-quartile:] if w.accuracy is not None
        ]
        gap = abs(
            sum(adaptive_tail) / len(adaptive_tail) - sum(baseline_tail) / len(baseline_tail)
        )
        assert gap <= 0.02
