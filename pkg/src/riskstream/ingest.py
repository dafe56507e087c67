"""Data acquisition stage: streaming normalization, event-time window, feature synthesis."""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from .domain import (
    ApplicantEvent,
    DimensionMismatch,
    EngineConfig,
    OutOfOrderEvent,
    ScorerParams,
)

__all__ = [
    "RunningStats",
    "StreamWindow",
    "FeatureFrame",
    "update_running_stats",
    "normalize",
    "synthesize_features",
    "Ingestor",
]


@dataclass(frozen=True, slots=True)
class RunningStats:
    """Single-pass mean/variance accumulator for one feature.

    Uses the Welford recurrence, so mean and m2 stay numerically stable for
    arbitrarily long streams. Population variance is m2 / count.
    """

    count: int = 0
    mean: float = 0.0
    m2: float = 0.0

    @property
    def variance(self) -> float:
        return self.m2 / self.count if self.count > 0 else 0.0

    @property
    def sigma(self) -> float:
        return math.sqrt(self.variance)


def update_running_stats(stats: RunningStats, x: float) -> RunningStats:
    """One Welford step; x must be finite (validated upstream)."""
    count = stats.count + 1
    delta = x - stats.mean
    mean = stats.mean + delta / count
    return RunningStats(count, mean, stats.m2 + delta * (x - mean))


def normalize(x: float, stats: RunningStats) -> float:
    """Center and scale x by the running statistics.

    Returns 0.0 while fewer than two observations exist or when the feature
    is degenerate (zero variance), so cold starts never divide by zero.
    """
    if stats.count < 2:
        return 0.0
    variance = stats.m2 / stats.count
    if variance <= 0.0:
        return 0.0
    return (x - stats.mean) / math.sqrt(variance)


class StreamWindow:
    """Event-time window over recent applications, capacity-capped FIFO.

    Grows by the inter-event gap of each arrival and evicts oldest entries
    beyond capacity. Rejects out-of-order arrivals.
    """

    __slots__ = ("capacity", "entries", "last_event_time_ms")

    def __init__(self, capacity: int) -> None:
        if capacity < 1:
            raise ValueError("window capacity must be >= 1")
        self.capacity = capacity
        self.entries: deque[tuple[int, str]] = deque()
        self.last_event_time_ms: int | None = None

    def advance(self, event: ApplicantEvent) -> int:
        """Append the event, evicting beyond capacity; returns the time delta."""
        t = event.event_time_ms
        if self.last_event_time_ms is not None and t < self.last_event_time_ms:
            raise OutOfOrderEvent(t, self.last_event_time_ms)
        delta = 0 if self.last_event_time_ms is None else t - self.last_event_time_ms
        self.last_event_time_ms = t
        self.entries.append((t, event.applicant_id))
        while len(self.entries) > self.capacity:
            self.entries.popleft()
        return delta

    def __len__(self) -> int:
        return len(self.entries)


@dataclass(frozen=True, eq=False, slots=True)
class FeatureFrame:
    """Normalized, weighted, and fused features for one applicant."""

    applicant_id: str
    normalized: np.ndarray
    weighted: np.ndarray
    fusion: float
    params_version: int


def synthesize_features(
    applicant_id: str, normalized: np.ndarray, params: ScorerParams
) -> FeatureFrame:
    """Apply per-feature importance weights and the quadratic fusion term.

    weighted[i] = feature_weights[i] * normalized[i]
    fusion      = sum_i fusion_coefficients[i] * normalized[i]^2
    """
    if normalized.size != params.dim:
        raise DimensionMismatch(params.dim, int(normalized.size))
    weighted = params.feature_weights * normalized
    fusion = float(np.dot(params.fusion_coefficients, normalized * normalized))
    return FeatureFrame(applicant_id, normalized, weighted, fusion, params.version)


class Ingestor:
    """Owns the running statistics and window for one event stream.

    Normalization of an event uses the statistics of all *prior* events, then
    folds the event in; the first two events of a stream therefore normalize
    to zero. Statistics run over the whole stream, not just the window.

    The per-feature accumulators are kept as vectors and updated with the
    same elementwise recurrence as `update_running_stats`, so the two paths
    are bit-identical; every event updates every feature, which lets all
    features share one count.
    """

    __slots__ = ("dim", "window", "_count", "_mean", "_m2")

    def __init__(self, config: EngineConfig) -> None:
        self.dim = config.feature_dim
        self.window = StreamWindow(config.window_capacity)
        self._count = 0
        self._mean = np.zeros(config.feature_dim)
        self._m2 = np.zeros(config.feature_dim)

    @property
    def stats(self) -> list[RunningStats]:
        return [
            RunningStats(self._count, float(m), float(s))
            for m, s in zip(self._mean, self._m2)
        ]

    def process(self, event: ApplicantEvent, params: ScorerParams) -> FeatureFrame:
        """Window-advance, normalize, update stats, and synthesize one frame."""
        self.window.advance(event)
        x = event.raw_features
        if self._count < 2:
            normalized = np.zeros(self.dim)
        else:
            sigma = np.sqrt(self._m2 / self._count)
            normalized = np.zeros(self.dim)
            np.divide(x - self._mean, sigma, out=normalized, where=sigma > 0.0)
        self._count += 1
        delta = x - self._mean
        self._mean = self._mean + delta / self._count
        self._m2 = self._m2 + delta * (x - self._mean)
        return synthesize_features(event.applicant_id, normalized, params)
