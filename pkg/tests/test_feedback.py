import math

import numpy as np
import pytest

from riskstream.domain import EmptyWindow, OutcomeEvent, default_config, initial_params
from riskstream.feedback import (
    DriftMonitor,
    FeedbackEngine,
    LabelJoinBuffer,
    PendingDecision,
    detect_drift,
    rolling_metric,
    sgd_update,
    window_loss,
)
from riskstream.ingest import synthesize_features
from riskstream.policy import DecisionKind
from riskstream.scoring import pd_from_normalized

from conftest import make_frame, make_params


class TestRollingMetric:
    def test_coin_flip_logloss(self):
        assert rolling_metric([(0.5, 1), (0.5, 0)], 1e-6) == pytest.approx(math.log(2), abs=1e-12)

    def test_perfect_prediction_near_zero(self):
        eps = 1e-6
        value = rolling_metric([(1.0 - eps, 1)] * 5, eps)
        assert value == pytest.approx(-math.log(1.0 - eps), abs=1e-12)
        assert value < 2e-6

    def test_empty_window(self):
        with pytest.raises(EmptyWindow):
            rolling_metric([], 1e-6)

    def test_clipping_bounds_extreme_scores(self):
        # a confidently wrong score must not produce an infinite loss
        value = rolling_metric([(1.0, 0)], 1e-6)
        assert value == pytest.approx(-math.log(1e-6), rel=1e-9)


class TestDetectDrift:
    def test_jump_above_gamma(self):
        assert detect_drift(0.62, 0.50, 0.1) is True

    def test_no_change(self):
        assert detect_drift(0.5, 0.5, 0.1) is False

    def test_boundary_is_quiet(self):
        assert detect_drift(0.6, 0.5, 0.1) is False  # D == gamma exactly

    def test_symmetric(self):
        assert detect_drift(0.50, 0.62, 0.1) is True


class TestSgdUpdate:
    def test_positive_label_raises_coefficient(self):
        params = make_params(feature_weights=(1.0, 1.0))
        frame = make_frame([1.0, 0.0], params)
        updated = sgd_update(params, frame, 1, lr=0.1)
        # pd 0.5, residual -0.5, weighted (1, 0)
        assert updated.coefficients[0] == pytest.approx(0.05, abs=1e-12)
        assert updated.coefficients[1] == 0.0
        assert updated.intercept == pytest.approx(0.05, abs=1e-12)

    def test_zero_features_move_only_intercept(self):
        params = make_params()
        frame = make_frame([0.0, 0.0], params)
        updated = sgd_update(params, frame, 0, lr=0.2)
        assert updated.intercept != 0.0
        assert updated.coefficients.tolist() == [0.0, 0.0]
        assert updated.feature_weights.tolist() == [1.0, 1.0]
        assert updated.fusion_gain == 0.0

    def test_vanishing_residual(self):
        params = make_params(intercept=30.0)  # pd ~ 1
        frame = make_frame([0.5, 0.5], params)
        updated = sgd_update(params, frame, 1, lr=0.5)
        assert abs(updated.intercept - params.intercept) < 1e-10

    def test_alpha_frozen_and_version_kept(self):
        params = make_params(fusion_coefficients=(0.3, 0.4), fusion_gain=0.2, version=5)
        frame = make_frame([1.0, -1.0], params)
        updated = sgd_update(params, frame, 1, lr=0.1)
        assert updated.fusion_coefficients.tolist() == [0.3, 0.4]
        assert updated.version == 5
        assert updated.fusion_gain != params.fusion_gain

    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(21)
        for _ in range(40):
            n = int(rng.integers(1, 5))
            params = make_params(
                intercept=rng.normal(),
                coefficients=tuple(rng.normal(size=n)),
                feature_weights=tuple(rng.normal(size=n)),
                fusion_coefficients=tuple(rng.normal(size=n)),
                fusion_gain=rng.normal(),
            )
            normalized = rng.normal(size=n)
            frame = make_frame(normalized, params)
            label = int(rng.integers(0, 2))
            lr = 0.05
            updated = sgd_update(params, frame, label, lr)

            def loss(p):
                pd = pd_from_normalized(p, normalized)
                return -math.log(pd) if label else -math.log(1.0 - pd)

            h = 1e-7
            import dataclasses

            def bump_intercept(delta):
                return dataclasses.replace(params, intercept=params.intercept + delta)

            fd = (loss(bump_intercept(h)) - loss(bump_intercept(-h))) / (2 * h)
            assert (params.intercept - updated.intercept) / lr == pytest.approx(fd, rel=1e-4, abs=1e-8)

            for i in range(n):
                def bump_coef(delta, i=i):
                    c = params.coefficients.copy()
                    c[i] += delta
                    return dataclasses.replace(params, coefficients=c)

                fd = (loss(bump_coef(h)) - loss(bump_coef(-h))) / (2 * h)
                step = (params.coefficients[i] - updated.coefficients[i]) / lr
                assert step == pytest.approx(fd, rel=1e-4, abs=1e-8)


class TestWindowLoss:
    def test_counting(self):
        pairs = [
            (DecisionKind.APPROVE, 1),
            (DecisionKind.APPROVE, 0),
            (DecisionKind.APPROVE, 0),
            (DecisionKind.APPROVE, 0),
            (DecisionKind.REJECT, 1),
            (DecisionKind.REVIEW, 1),
        ]
        assert window_loss(pairs) == pytest.approx(0.25)

    def test_no_approvals(self):
        assert window_loss([(DecisionKind.REJECT, 1), (DecisionKind.REVIEW, 0)]) is None

    def test_all_defaulted(self):
        assert window_loss([(DecisionKind.APPROVE, 1)] * 3 ) == 1.0


def pending(pd=0.5, kind=DecisionKind.APPROVE, t=0, params=None):
    params = params or make_params()
    return PendingDecision(make_frame([0.1, -0.1], params), pd, kind, t)


class TestLabelJoinBuffer:
    def test_capacity_eviction_oldest_first(self):
        buffer = LabelJoinBuffer(2)
        buffer.add("a", pending())
        buffer.add("b", pending())
        buffer.add("c", pending())
        assert "a" not in buffer
        assert buffer.evictions == 1
        assert len(buffer) == 2

    def test_duplicate_replaces_and_counts(self):
        buffer = LabelJoinBuffer(5)
        buffer.add("a", pending(pd=0.1))
        buffer.add("a", pending(pd=0.9))
        assert buffer.duplicates == 1
        assert len(buffer) == 1
        assert buffer.pop("a").pd == 0.9

    def test_pop_removes(self):
        buffer = LabelJoinBuffer(5)
        buffer.add("a", pending())
        assert buffer.pop("a") is not None
        assert buffer.pop("a") is None


class TestDriftMonitor:
    def test_emits_summary_on_window_completion(self):
        monitor = DriftMonitor(window_size=3, gamma=0.1, clip_eps=1e-6)
        assert monitor.add(0.5, 1, DecisionKind.APPROVE) is None
        assert monitor.add(0.5, 0, DecisionKind.APPROVE) is None
        summary = monitor.add(0.5, 1, DecisionKind.APPROVE)
        assert summary is not None
        assert summary.index == 0
        assert summary.size == 3
        assert summary.drift is False  # first window has no predecessor
        assert summary.loss == pytest.approx(2.0 / 3.0)

    def test_tumbling_windows_and_drift(self):
        monitor = DriftMonitor(window_size=2, gamma=0.05, clip_eps=1e-6)
        monitor.add(0.5, 1, DecisionKind.REJECT)
        first = monitor.add(0.5, 0, DecisionKind.REJECT)
        monitor.add(0.9, 0, DecisionKind.REJECT)  # badly wrong now
        second = monitor.add(0.9, 0, DecisionKind.REJECT)
        assert first.metric == pytest.approx(math.log(2))
        assert second.prev_metric == pytest.approx(math.log(2))
        assert second.drift is True
        assert second.index == 1


def outcome(applicant_id, t=100, label=1):
    return OutcomeEvent(applicant_id, t, label)


class TestFeedbackEngine:
    def make_engine(self, metric_window=2, **overrides):
        config = default_config(2, metric_window=metric_window, **overrides)
        return FeedbackEngine(config, initial_params(config))

    def test_unknown_id_leaves_state_unchanged(self):
        engine = self.make_engine()
        before = engine.params
        result = engine.process_outcome(outcome("ghost"))
        assert result.status == "no_pending"
        assert engine.params is before

    def test_stale_outcome_dropped(self):
        engine = self.make_engine()
        engine.add_pending("a", pending(t=500))
        result = engine.process_outcome(OutcomeEvent("a", 400, 1))
        assert result.status == "stale"

    def test_publication_cadence(self):
        engine = self.make_engine(metric_window=2)
        publications = 0
        for i in range(6):
            engine.add_pending(f"a{i}", pending(t=i))
            result = engine.process_outcome(outcome(f"a{i}", t=i + 10))
            if result.publication is not None:
                publications += 1
                assert result.summary is not None
        assert publications == 3

    def test_versions_strictly_increase(self):
        engine = self.make_engine(metric_window=1)
        versions = []
        for i in range(5):
            engine.add_pending(f"a{i}", pending(t=i))
            result = engine.process_outcome(outcome(f"a{i}", t=i + 10))
            versions.append(result.publication.version)
        assert versions == [1, 2, 3, 4, 5]

    def test_drift_boosts_learning_rate_for_one_window(self):
        config = default_config(
            2, metric_window=2, gamma=0.01, learning_rate=0.1, drift_boost_factor=3.0
        )
        engine = FeedbackEngine(config, initial_params(config))

        def run_window(pd, label):
            for i in range(2):
                key = f"w{engine.monitor.windows_completed}-{i}"
                engine.add_pending(key, pending(pd=pd, t=0))
                engine.process_outcome(outcome(key, t=10, label=label))

        run_window(0.5, 1)          # first window: no predecessor, no drift
        assert engine.lr == 0.1
        run_window(0.999, 0)        # metric jumps: drift
        assert engine.lr == pytest.approx(0.3)
        run_window(0.999, 0)        # stable again: reset
        assert engine.lr == pytest.approx(0.1)

    def test_frozen_engine_ignores_outcomes(self):
        engine = self.make_engine()
        engine.add_pending("a", pending())
        engine.frozen = True
        result = engine.process_outcome(outcome("a"))
        assert result.status == "frozen"
        assert len(engine.buffer) == 1


class TestLearningSanity:
    def test_epochs_reduce_logloss(self):
        rng = np.random.default_rng(77)
        n = 3
        truth = make_params(
            intercept=-0.4,
            coefficients=(1.5, -1.0, 0.6),
            feature_weights=(1.0, 1.0, 1.0),
        )
        features = rng.normal(size=(400, n))
        probs = [pd_from_normalized(truth, x) for x in features]
        labels = (rng.random(400) < np.array(probs)).astype(int)

        params = make_params(coefficients=(0.0,) * n, feature_weights=(1.0,) * n)
        frames = [synthesize_features(f"b{i}", features[i], params) for i in range(400)]

        def mean_logloss(p):
            total = 0.0
            for x, y in zip(features, labels):
                pd = min(max(pd_from_normalized(p, x), 1e-12), 1 - 1e-12)
                total += -math.log(pd) if y else -math.log(1.0 - pd)
            return total / len(labels)

        initial = mean_logloss(params)
        for _ in range(10):
            for frame, label in zip(frames, labels):
                params = sgd_update(params, frame, int(label), lr=0.05)
        final = mean_logloss(params)
        assert final < initial
