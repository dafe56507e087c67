"""Feedback learning: outcome joining, rolling metrics, drift detection, online updates."""

from __future__ import annotations

import math
from collections import OrderedDict
from dataclasses import dataclass

import numpy as np

from .domain import (
    DimensionMismatch,
    EmptyWindow,
    EngineConfig,
    OutcomeEvent,
    ScorerParams,
)
from .ingest import FeatureFrame
from .policy import DecisionKind
from .scoring import pd_from_parts

__all__ = [
    "rolling_metric",
    "detect_drift",
    "sgd_update",
    "window_loss",
    "PendingDecision",
    "LabelJoinBuffer",
    "WindowSummary",
    "DriftMonitor",
    "OutcomeResult",
    "FeedbackEngine",
]


def rolling_metric(window, clip_eps: float) -> float:
    """Mean binary cross-entropy of (pd, label) pairs, with clipped probabilities."""
    total = 0.0
    count = 0
    lo, hi = clip_eps, 1.0 - clip_eps
    for pd, label in window:
        p = min(max(pd, lo), hi)
        total += -(math.log(p) if label else math.log(1.0 - p))
        count += 1
    if count == 0:
        raise EmptyWindow("rolling metric needs at least one labeled example")
    return total / count


def detect_drift(m_curr: float, m_prev: float, gamma: float) -> bool:
    """True iff the metric jump strictly exceeds gamma; the boundary is quiet."""
    return abs(m_curr - m_prev) > gamma


def sgd_update(
    params: ScorerParams, frame: FeatureFrame, label: int, lr: float
) -> ScorerParams:
    """One gradient step on the log-loss of the scored frame.

    The weighted and fusion terms are recomputed under the given parameters
    (which may be newer than the frame's scoring-time version) so the step is
    a true gradient of the current model. Fusion coefficients stay frozen;
    the version number is unchanged, publication assigns versions.
    """
    normalized = frame.normalized
    if normalized.size != params.dim:
        raise DimensionMismatch(params.dim, int(normalized.size))
    weighted = params.feature_weights * normalized
    fusion = float(np.dot(params.fusion_coefficients, normalized * normalized))
    residual = pd_from_parts(params, weighted, fusion) - float(label)
    step = lr * residual
    return ScorerParams(
        version=params.version,
        intercept=params.intercept - step,
        coefficients=params.coefficients - step * weighted,
        feature_weights=params.feature_weights
        - step * params.coefficients * normalized,
        fusion_coefficients=params.fusion_coefficients,
        fusion_gain=params.fusion_gain - step * fusion,
    )


def window_loss(decisions_with_outcomes) -> float | None:
    """Default rate among approved entries; None when none were approved."""
    approved = 0
    defaulted = 0
    for kind, label in decisions_with_outcomes:
        if kind is DecisionKind.APPROVE:
            approved += 1
            defaulted += label
    if approved == 0:
        return None
    return defaulted / approved


@dataclass(frozen=True, eq=False, slots=True)
class PendingDecision:
    """What the learner needs once an outcome arrives for a decided applicant."""

    frame: FeatureFrame
    pd: float
    decision: DecisionKind
    event_time_ms: int


class LabelJoinBuffer:
    """Pending decisions awaiting their repayment outcome, keyed by applicant id.

    Capacity-bounded with oldest-first eviction. A duplicate id replaces the
    stale entry and is counted; stream ids are unique by contract, so this is
    defensive only.
    """

    __slots__ = ("capacity", "_pending", "evictions", "duplicates")

    def __init__(self, capacity: int) -> None:
        self.capacity = capacity
        self._pending: OrderedDict[str, PendingDecision] = OrderedDict()
        self.evictions = 0
        self.duplicates = 0

    def add(self, applicant_id: str, pending: PendingDecision) -> None:
        if applicant_id in self._pending:
            del self._pending[applicant_id]
            self.duplicates += 1
        self._pending[applicant_id] = pending
        while len(self._pending) > self.capacity:
            self._pending.popitem(last=False)
            self.evictions += 1

    def pop(self, applicant_id: str) -> PendingDecision | None:
        return self._pending.pop(applicant_id, None)

    def __contains__(self, applicant_id: str) -> bool:
        return applicant_id in self._pending

    def __len__(self) -> int:
        return len(self._pending)


@dataclass(frozen=True, slots=True)
class WindowSummary:
    """Result of one completed (tumbling) metric window."""

    index: int
    size: int
    metric: float
    prev_metric: float | None
    delta: float | None
    drift: bool
    loss: float | None


class DriftMonitor:
    """Tumbling window of labeled examples; emits a summary when each completes.

    Drift compares consecutive window metrics with a strict threshold; the
    first window has no predecessor and never flags.
    """

    __slots__ = ("window_size", "gamma", "clip_eps", "_pairs", "_decisions", "m_prev", "windows_completed")

    def __init__(self, window_size: int, gamma: float, clip_eps: float) -> None:
        self.window_size = window_size
        self.gamma = gamma
        self.clip_eps = clip_eps
        self._pairs: list[tuple[float, int]] = []
        self._decisions: list[tuple[DecisionKind, int]] = []
        self.m_prev: float | None = None
        self.windows_completed = 0

    def add(self, pd: float, label: int, decision: DecisionKind) -> WindowSummary | None:
        self._pairs.append((pd, label))
        self._decisions.append((decision, label))
        if len(self._pairs) < self.window_size:
            return None
        metric = rolling_metric(self._pairs, self.clip_eps)
        prev = self.m_prev
        delta = None if prev is None else abs(metric - prev)
        drift = False if prev is None else detect_drift(metric, prev, self.gamma)
        loss = window_loss(self._decisions)
        summary = WindowSummary(
            index=self.windows_completed,
            size=len(self._pairs),
            metric=metric,
            prev_metric=prev,
            delta=delta,
            drift=drift,
            loss=loss,
        )
        self.windows_completed += 1
        self.m_prev = metric
        self._pairs.clear()
        self._decisions.clear()
        return summary


@dataclass(frozen=True, eq=False, slots=True)
class OutcomeResult:
    """What one outcome did to the learner."""

    status: str  # "joined" | "no_pending" | "stale" | "frozen"
    publication: ScorerParams | None = None
    summary: WindowSummary | None = None


class FeedbackEngine:
    """Owns the learning state: join buffer, drift monitor, and online scorer updates.

    Processes outcomes one at a time; when a metric window completes it
    publishes a fresh parameter snapshot (version + 1), reports the window's
    approved-loan loss, and arms a learning-rate boost for the next window if
    drift fired.
    """

    def __init__(self, config: EngineConfig, params: ScorerParams) -> None:
        self.params = params
        self.base_lr = config.learning_rate
        self.lr = config.learning_rate
        self.boost_factor = config.drift_boost_factor
        self.buffer = LabelJoinBuffer(config.join_buffer_capacity)
        self.monitor = DriftMonitor(
            config.metric_window, config.gamma, config.pd_clip_epsilon
        )
        self._next_version = params.version + 1
        self.frozen = False

    def add_pending(self, applicant_id: str, pending: PendingDecision) -> None:
        self.buffer.add(applicant_id, pending)

    def process_outcome(self, outcome: OutcomeEvent) -> OutcomeResult:
        if self.frozen:
            return OutcomeResult("frozen")
        pending = self.buffer.pop(outcome.applicant_id)
        if pending is None:
            return OutcomeResult("no_pending")
        if outcome.outcome_time_ms < pending.event_time_ms:
            return OutcomeResult("stale")

        self.params = sgd_update(self.params, pending.frame, outcome.label, self.lr)
        summary = self.monitor.add(pending.pd, outcome.label, pending.decision)
        if summary is None:
            return OutcomeResult("joined")

        published = self.params.with_version(self._next_version)
        self._next_version += 1
        self.params = published
        # Drift arms a boosted learning rate for exactly the next window.
        self.lr = self.base_lr * self.boost_factor if summary.drift else self.base_lr
        return OutcomeResult("joined", publication=published, summary=summary)
