"""Agent pipeline runtime.

Five sequential reactors (acquisition, scoring, decision, feedback, plus the
audit sink) communicate over ordered queues. Two execution modes share the
same agent objects:

* deterministic: a single thread drains every message an ingress event
  produces before admitting the next event, so replays are byte-identical;
* pipelined: one thread per agent over bounded blocking queues, with optional
  hash-sharding of the scoring stage and micro-batched frames for throughput.

Parameter snapshots never travel through the data queues. The feedback agent
publishes them to a shared versioned store tagged with the publishing
ingress sequence; scoring resolves the newest snapshot published strictly
before each event's ingress sequence, so assessments can never see
parameters from their own future. Loss notifications flow back to the
decision agent through an unbounded control mailbox, keeping the bounded
data path cycle-free (and therefore deadlock-free).
"""

from __future__ import annotations

import math
import threading
import time
import zlib
from collections import OrderedDict, deque
from dataclasses import dataclass, field
from queue import Queue

from .domain import (
    ApplicantEvent,
    DimensionMismatch,
    EngineConfig,
    NonFiniteFeature,
    NoSamples,
    OutcomeEvent,
    OutOfOrderEvent,
    ScorerParams,
    initial_params,
    validate_config,
    validate_event,
)
from .feedback import FeedbackEngine, PendingDecision
from .ingest import FeatureFrame, Ingestor
from .policy import DecisionKind, ThresholdState, decide, update_threshold
from .scoring import RiskAssessment, ScorerEnsemble, assess, assess_batch

__all__ = [
    "DecisionRecord",
    "FeedbackLogEntry",
    "PipelineStats",
    "LatencySummary",
    "measure_latency",
    "ParamStore",
    "CollectorSink",
    "PipelineResult",
    "run_pipeline",
    "reference_execute",
]


@dataclass(frozen=True, slots=True)
class DecisionRecord:
    """The audit-log unit: one decision with its full assessment and explanation."""

    applicant_id: str
    decision: DecisionKind
    assessment: RiskAssessment
    tau_used: float
    band_used: float
    ingress_seq: int
    latency_us: int
    decided_at_ms: int
    explanation: tuple[tuple[int, float], ...]


@dataclass(frozen=True)
class FeedbackLogEntry:
    """One feedback-agent notification: a published snapshot, window loss, or drift flag."""

    kind: str  # "params_published" | "loss_window" | "drift_flag"
    seq: int
    window_index: int
    version: int | None = None
    metric: float | None = None
    delta: float | None = None
    loss: float | None = None


@dataclass(frozen=True)
class LatencySummary:
    count: int
    p50_us: int
    p99_us: int
    max_us: int
    mean_us: float


def measure_latency(samples: list[int]) -> LatencySummary:
    """Nearest-rank order statistics over recorded per-decision latencies."""
    if not samples:
        raise NoSamples("no latency samples recorded")
    ordered = sorted(samples)
    n = len(ordered)

    def rank(q: float) -> int:
        return ordered[max(1, math.ceil(q * n)) - 1]

    return LatencySummary(
        count=n,
        p50_us=rank(0.50),
        p99_us=rank(0.99),
        max_us=ordered[-1],
        mean_us=sum(ordered) / n,
    )


@dataclass
class PipelineStats:
    """Counters, latency samples, and queue gauges for one pipeline run."""

    mode: str = "deterministic"
    accepted: int = 0
    skipped_events: int = 0
    decisions: int = 0
    outcomes_seen: int = 0
    outcomes_joined: int = 0
    orphan_outcomes: int = 0
    stale_outcomes: int = 0
    frozen_outcomes: int = 0
    duplicate_pending: int = 0
    evicted_pending: int = 0
    windows_completed: int = 0
    drift_flags: int = 0
    params_published: int = 0
    final_tau: float = 0.0
    final_params_version: int = 0
    elapsed_s: float = 0.0
    latency_us: list[int] = field(default_factory=list)
    queue_highwater: dict[str, int] = field(default_factory=dict)

    @property
    def throughput(self) -> float | None:
        if self.elapsed_s > 0 and self.decisions > 0:
            return self.decisions / self.elapsed_s
        return None

    def latency_summary(self) -> LatencySummary:
        return measure_latency(self.latency_us)

    def counters(self) -> dict[str, int]:
        return {
            "accepted": self.accepted,
            "skipped_events": self.skipped_events,
            "decisions": self.decisions,
            "outcomes_seen": self.outcomes_seen,
            "outcomes_joined": self.outcomes_joined,
            "orphan_outcomes": self.orphan_outcomes,
            "stale_outcomes": self.stale_outcomes,
            "frozen_outcomes": self.frozen_outcomes,
            "duplicate_pending": self.duplicate_pending,
            "evicted_pending": self.evicted_pending,
            "windows_completed": self.windows_completed,
            "drift_flags": self.drift_flags,
            "params_published": self.params_published,
        }


class ParamStore:
    """Versioned snapshot store shared between the feedback and scoring stages.

    Each publication is tagged with the ingress sequence of the outcome that
    produced it; resolution for an event only considers snapshots published
    strictly before that event's sequence.
    """

    _TRIM = 4096

    def __init__(self, params: ScorerParams, ensemble_size: int) -> None:
        self._history: list[tuple[int, ScorerParams]] = [(-1, params)]
        self._k = ensemble_size
        self._lock = threading.Lock()
        self._cache_version: int | None = None
        self._cache: tuple[ScorerParams, ScorerEnsemble] | None = None

    def publish(self, seq: int, params: ScorerParams) -> None:
        with self._lock:
            self._history.append((seq, params))
            if len(self._history) > self._TRIM:
                del self._history[: len(self._history) - self._TRIM]

    @property
    def latest_version(self) -> int:
        with self._lock:
            return self._history[-1][1].version

    def resolve(self, seq: int) -> tuple[ScorerParams, ScorerEnsemble]:
        """Newest snapshot (and K-ensemble) published before ingress `seq`."""
        with self._lock:
            idx = len(self._history) - 1
            while idx > 0 and self._history[idx][0] >= seq:
                idx -= 1
            version = self._history[idx][1].version
            if version == self._cache_version and self._cache is not None:
                return self._cache
            newest_first = [p for _, p in self._history[max(0, idx - self._k + 1) : idx + 1]]
            newest_first.reverse()
            ensemble = ScorerEnsemble.build(newest_first, self._k)
            self._cache_version = version
            self._cache = (ensemble.snapshots[0], ensemble)
            return self._cache


class CollectorSink:
    """Accumulates decision records and feedback entries in memory."""

    def __init__(self) -> None:
        self.records: list[DecisionRecord] = []
        self.feedback: list[FeedbackLogEntry] = []

    def on_decision(self, record: DecisionRecord) -> None:
        self.records.append(record)

    def on_feedback(self, entry: FeedbackLogEntry) -> None:
        self.feedback.append(entry)


@dataclass(frozen=True)
class PipelineResult:
    records: list[DecisionRecord]
    feedback_log: list[FeedbackLogEntry]
    stats: PipelineStats


# Internal message envelopes. Sequence numbers are assigned at ingress and
# carried through every derived message.


@dataclass(frozen=True, eq=False, slots=True)
class _Ingress:
    seq: int
    event: object  # ApplicantEvent | OutcomeEvent
    ingress_ns: int | None


@dataclass(frozen=True, eq=False, slots=True)
class _FrameMsg:
    seq: int
    app_index: int
    frame: FeatureFrame
    params: ScorerParams
    ensemble: ScorerEnsemble
    event_time_ms: int
    ingress_ns: int | None


@dataclass(frozen=True, eq=False, slots=True)
class _AssessMsg:
    seq: int
    app_index: int
    frame: FeatureFrame
    assessment: RiskAssessment
    event_time_ms: int
    ingress_ns: int | None


@dataclass(frozen=True, eq=False, slots=True)
class _PendingMsg:
    seq: int
    applicant_id: str
    pending: PendingDecision


@dataclass(frozen=True, eq=False, slots=True)
class _LossMsg:
    seq: int
    window_index: int
    loss: float


class _Close:
    __slots__ = ("label",)

    def __init__(self, label: str) -> None:
        self.label = label


_CLOSE = _Close("stream")
_CLOSE_OUTCOMES = _Close("outcomes")
_CLOSE_PENDINGS = _Close("pendings")


def _shard_of(applicant_id: str, shards: int) -> int:
    if shards == 1:
        return 0
    return zlib.crc32(applicant_id.encode("utf-8")) % shards


class _IngestAgent:
    """Validates applications, normalizes features, routes outcomes onward."""

    def __init__(self, config: EngineConfig, store: ParamStore, stats: PipelineStats) -> None:
        self.config = config
        self.store = store
        self.stats = stats
        self.ingestor = Ingestor(config)
        self.app_count = 0

    def handle(self, msg: _Ingress) -> list[tuple[str, object]]:
        event = msg.event
        if isinstance(event, OutcomeEvent):
            self.stats.outcomes_seen += 1
            return [("feedback", msg)]
        try:
            validate_event(event, self.config.feature_dim)
            params, ensemble = self.store.resolve(msg.seq)
            frame = self.ingestor.process(event, params)
        except (DimensionMismatch, NonFiniteFeature, OutOfOrderEvent):
            self.stats.skipped_events += 1
            return []
        app_index = self.app_count
        self.app_count += 1
        self.stats.accepted += 1
        shard = _shard_of(event.applicant_id, self.config.scoring_shards)
        frame_msg = _FrameMsg(
            msg.seq, app_index, frame, params, ensemble,
            event.event_time_ms, msg.ingress_ns,
        )
        return [(f"scoring:{shard}", frame_msg)]


class _ScoringAgent:
    """Pure scoring: one assessment per frame.

    Frame batches are scored with the vectorized path, split into runs that
    share a parameter snapshot (snapshots change once per metric window, so a
    batch almost never splits).
    """

    def handle(self, msg) -> list[tuple[str, object]]:
        if isinstance(msg, list):
            out: list[_AssessMsg] = []
            i = 0
            while i < len(msg):
                j = i + 1
                while j < len(msg) and msg[j].params is msg[i].params:
                    j += 1
                group = msg[i:j]
                assessments = assess_batch(
                    [m.frame for m in group],
                    group[0].params,
                    group[0].ensemble,
                    [m.event_time_ms for m in group],
                )
                out.extend(
                    _AssessMsg(m.seq, m.app_index, m.frame, a, m.event_time_ms, m.ingress_ns)
                    for m, a in zip(group, assessments)
                )
                i = j
            return [("policy", out)]
        return [("policy", self._assess_one(msg))]

    @staticmethod
    def _assess_one(msg: _FrameMsg) -> _AssessMsg:
        assessment = assess(msg.frame, msg.params, msg.ensemble, msg.event_time_ms)
        return _AssessMsg(
            msg.seq, msg.app_index, msg.frame, assessment,
            msg.event_time_ms, msg.ingress_ns,
        )


class _PolicyAgent:
    """Threshold updates plus the three-way decision; re-merges sharded output.

    Assessments are emitted in dense application-index order regardless of
    scoring shard interleaving, so the audit stream stays ordered.
    """

    def __init__(self, config: EngineConfig, stats: PipelineStats, freeze_after: int | None) -> None:
        self.config = config
        self.stats = stats
        self.freeze_after = freeze_after
        self.state = ThresholdState(config.tau_init)
        self.top_k = min(config.explanation_top_k, config.feature_dim)
        self._reorder: dict[int, _AssessMsg] = {}
        self._next_index = 0

    def _frozen(self, seq: int) -> bool:
        return self.freeze_after is not None and seq >= self.freeze_after

    def handle(self, msg) -> list[tuple[str, object]]:
        if isinstance(msg, _LossMsg):
            if not self._frozen(msg.seq):
                self.state = update_threshold(
                    self.state, msg.loss, self.config.eta,
                    self.config.tau_min, self.config.tau_max,
                )
            return []
        out: list[tuple[str, object]] = []
        batch = msg if isinstance(msg, list) else [msg]
        for item in batch:
            self._reorder[item.app_index] = item
        while self._next_index in self._reorder:
            out.extend(self._decide_one(self._reorder.pop(self._next_index)))
            self._next_index += 1
        return out

    def _decide_one(self, msg: _AssessMsg) -> list[tuple[str, object]]:
        assessment = msg.assessment
        kind = decide(assessment.pd, self.state, self.config.review_band)
        if msg.ingress_ns is None:
            latency_us = 0
        else:
            latency_us = (time.perf_counter_ns() - msg.ingress_ns) // 1000
        ranked = assessment.attributions.top_k[: self.top_k]
        explanation = tuple((i, assessment.attributions.values[i]) for i in ranked)
        record = DecisionRecord(
            applicant_id=msg.frame.applicant_id,
            decision=kind,
            assessment=assessment,
            tau_used=self.state.tau,
            band_used=self.config.review_band,
            ingress_seq=msg.seq,
            latency_us=latency_us,
            decided_at_ms=msg.event_time_ms,
            explanation=explanation,
        )
        self.stats.decisions += 1
        self.stats.latency_us.append(latency_us)
        out: list[tuple[str, object]] = [("audit", record)]
        if not self._frozen(msg.seq):
            pending = PendingDecision(msg.frame, assessment.pd, kind, msg.event_time_ms)
            out.append(("feedback", _PendingMsg(msg.seq, msg.frame.applicant_id, pending)))
        return out


class _FeedbackAgent:
    """Joins outcomes to decisions, drives learning, publishes snapshots.

    In pipelined mode an outcome can overtake its own decision through the
    queues; such outcomes wait in a bounded stash until the pending decision
    arrives (deterministic mode never needs this, the stash stays empty).
    """

    def __init__(
        self,
        config: EngineConfig,
        store: ParamStore,
        stats: PipelineStats,
        freeze_after: int | None,
        stash_capacity: int,
    ) -> None:
        self.store = store
        self.stats = stats
        self.freeze_after = freeze_after
        self.engine = FeedbackEngine(config, initial_params(config))
        self.stash_capacity = stash_capacity
        self._stash: OrderedDict[str, _Ingress] = OrderedDict()

    def _frozen(self, seq: int) -> bool:
        return self.freeze_after is not None and seq >= self.freeze_after

    def handle(self, msg) -> list[tuple[str, object]]:
        if isinstance(msg, _PendingMsg):
            self.engine.add_pending(msg.applicant_id, msg.pending)
            stashed = self._stash.pop(msg.applicant_id, None)
            if stashed is not None:
                return self._process_outcome(stashed)
            return []
        return self._process_outcome(msg)

    def _process_outcome(self, msg: _Ingress) -> list[tuple[str, object]]:
        outcome: OutcomeEvent = msg.event
        if self._frozen(msg.seq):
            self.stats.frozen_outcomes += 1
            return []
        result = self.engine.process_outcome(outcome)
        if result.status == "no_pending":
            if self.stash_capacity > 0:
                self._stash[outcome.applicant_id] = msg
                while len(self._stash) > self.stash_capacity:
                    self._stash.popitem(last=False)
                    self.stats.orphan_outcomes += 1
            else:
                self.stats.orphan_outcomes += 1
            return []
        if result.status == "stale":
            self.stats.stale_outcomes += 1
            return []
        self.stats.outcomes_joined += 1
        if result.publication is None:
            return []

        self.store.publish(msg.seq, result.publication)
        summary = result.summary
        self.stats.params_published += 1
        self.stats.windows_completed += 1
        out: list[tuple[str, object]] = [
            (
                "log",
                FeedbackLogEntry(
                    kind="params_published",
                    seq=msg.seq,
                    window_index=summary.index,
                    version=result.publication.version,
                    metric=summary.metric,
                    delta=summary.delta,
                ),
            )
        ]
        if summary.loss is not None:
            out.append(("policy", _LossMsg(msg.seq, summary.index, summary.loss)))
            out.append(
                (
                    "log",
                    FeedbackLogEntry(
                        kind="loss_window",
                        seq=msg.seq,
                        window_index=summary.index,
                        loss=summary.loss,
                    ),
                )
            )
        if summary.drift:
            self.stats.drift_flags += 1
            out.append(
                (
                    "log",
                    FeedbackLogEntry(
                        kind="drift_flag",
                        seq=msg.seq,
                        window_index=summary.index,
                        metric=summary.metric,
                        delta=summary.delta,
                    ),
                )
            )
        return out

    def finish(self) -> None:
        self.stats.orphan_outcomes += len(self._stash)
        self._stash.clear()
        self.stats.duplicate_pending = self.engine.buffer.duplicates
        self.stats.evicted_pending = self.engine.buffer.evictions


def _emit(sinks, dest: str, payload) -> None:
    if dest == "audit":
        for s in sinks:
            s.on_decision(payload)
    else:
        for s in sinks:
            s.on_feedback(payload)


def run_pipeline(
    events,
    config: EngineConfig,
    *,
    deterministic: bool | None = None,
    freeze_after: int | None = None,
    sink=None,
) -> PipelineResult:
    """Run the full agent pipeline over an ordered event stream.

    `freeze_after` disables learning, threshold adaptation, and drift
    response for every event whose ingress sequence is at or past the given
    index (the frozen-baseline comparator).
    """
    validate_config(config)
    det = config.deterministic_mode if deterministic is None else deterministic

    collector = CollectorSink()
    sinks = [collector] if sink is None else [collector, sink]
    stats = PipelineStats(mode="deterministic" if det else "pipelined")
    store = ParamStore(initial_params(config), config.ensemble_size)

    ingest = _IngestAgent(config, store, stats)
    shards = 1 if det else config.scoring_shards
    scoring = [_ScoringAgent() for _ in range(shards)]
    policy = _PolicyAgent(config, stats, freeze_after)
    feedback = _FeedbackAgent(
        config, store, stats, freeze_after,
        stash_capacity=0 if det else min(4096, config.join_buffer_capacity),
    )

    started = time.perf_counter()
    if det:
        _run_deterministic(events, ingest, scoring, policy, feedback, sinks)
    else:
        _run_threaded(events, config, ingest, scoring, policy, feedback, sinks, stats)
    stats.elapsed_s = time.perf_counter() - started

    feedback.finish()
    stats.final_tau = policy.state.tau
    stats.final_params_version = store.latest_version
    return PipelineResult(collector.records, collector.feedback, stats)


def _run_deterministic(events, ingest, scoring, policy, feedback, sinks) -> None:
    agents = {"ingest": ingest, "policy": policy, "feedback": feedback}
    for i, agent in enumerate(scoring):
        agents[f"scoring:{i}"] = agent
    work: deque[tuple[str, object]] = deque()
    seq = -1
    for event in events:
        seq += 1
        work.append(("ingest", _Ingress(seq, event, None)))
        while work:
            dest, msg = work.popleft()
            if dest in ("audit", "log"):
                _emit(sinks, dest, msg)
            else:
                work.extend(agents[dest].handle(msg))


def _run_threaded(events, config, ingest, scoring, policy, feedback, sinks, stats) -> None:
    cap = config.queue_capacity
    batch_max = config.batch_max
    shards = len(scoring)
    q_ingest: Queue = Queue(cap)
    q_scoring: list[Queue] = [Queue(cap) for _ in range(shards)]
    q_policy: Queue = Queue(cap)
    q_feedback: Queue = Queue(cap)
    loss_box: deque = deque()
    highwater = stats.queue_highwater

    def put(q: Queue, key: str, item) -> None:
        q.put(item)
        size = q.qsize()
        if size > highwater.get(key, 0):
            highwater[key] = size

    def ingest_loop() -> None:
        frame_buf: list[list[_FrameMsg]] = [[] for _ in range(shards)]
        outcome_buf: list[_Ingress] = []

        def flush() -> None:
            nonlocal outcome_buf
            for i in range(shards):
                if frame_buf[i]:
                    put(q_scoring[i], f"scoring:{i}", frame_buf[i])
                    frame_buf[i] = []
            if outcome_buf:
                put(q_feedback, "feedback", outcome_buf)
                outcome_buf = []

        while True:
            msg = q_ingest.get()
            if msg is _CLOSE:
                flush()
                for i in range(shards):
                    q_scoring[i].put(_CLOSE)
                q_feedback.put(_CLOSE_OUTCOMES)
                return
            for dest, m in ingest.handle(msg):
                if dest == "feedback":
                    outcome_buf.append(m)
                    if len(outcome_buf) >= batch_max:
                        flush()
                else:
                    i = int(dest.split(":", 1)[1])
                    frame_buf[i].append(m)
                    if len(frame_buf[i]) >= batch_max:
                        flush()
            if q_ingest.empty():
                flush()

    def scoring_loop(i: int) -> None:
        q = q_scoring[i]
        agent = scoring[i]
        while True:
            msg = q.get()
            if msg is _CLOSE:
                q_policy.put(_CLOSE)
                return
            for _, m in agent.handle(msg):
                put(q_policy, "policy", m)

    def policy_loop() -> None:
        closes = 0
        while closes < shards:
            msg = q_policy.get()
            if msg is _CLOSE:
                closes += 1
                continue
            while loss_box:
                policy.handle(loss_box.popleft())
            pendings: list[_PendingMsg] = []
            for dest, m in policy.handle(msg):
                if dest == "audit":
                    _emit(sinks, dest, m)
                else:
                    pendings.append(m)
            if pendings:
                put(q_feedback, "feedback", pendings)
        while loss_box:
            policy.handle(loss_box.popleft())
        q_feedback.put(_CLOSE_PENDINGS)

    def feedback_loop() -> None:
        outcomes_open = pendings_open = True
        while outcomes_open or pendings_open:
            msg = q_feedback.get()
            if msg is _CLOSE_OUTCOMES:
                outcomes_open = False
                continue
            if msg is _CLOSE_PENDINGS:
                pendings_open = False
                continue
            for item in msg if isinstance(msg, list) else (msg,):
                for dest, m in feedback.handle(item):
                    if dest == "policy":
                        loss_box.append(m)
                    else:
                        _emit(sinks, dest, m)

    threads = [
        threading.Thread(target=ingest_loop, name="ingest", daemon=True),
        *(
            threading.Thread(target=scoring_loop, args=(i,), name=f"scoring-{i}", daemon=True)
            for i in range(shards)
        ),
        threading.Thread(target=policy_loop, name="policy", daemon=True),
        threading.Thread(target=feedback_loop, name="feedback", daemon=True),
    ]
    for t in threads:
        t.start()
    seq = -1
    for event in events:
        seq += 1
        put(q_ingest, "ingest", _Ingress(seq, event, time.perf_counter_ns()))
    q_ingest.put(_CLOSE)
    for t in threads:
        t.join()


def reference_execute(events, config: EngineConfig, *, freeze_after: int | None = None) -> PipelineResult:
    """Straight-line single-threaded executor: the behavioral oracle.

    Applies acquisition, scoring, decision, and feedback in strict stream
    order with no queues, no agents, and no scheduling. Deterministic-mode
    `run_pipeline` must match its output byte for byte.
    """
    validate_config(config)
    stats = PipelineStats(mode="reference")
    store = ParamStore(initial_params(config), config.ensemble_size)
    ingestor = Ingestor(config)
    engine = FeedbackEngine(config, initial_params(config))
    state = ThresholdState(config.tau_init)
    top_k = min(config.explanation_top_k, config.feature_dim)
    records: list[DecisionRecord] = []
    log: list[FeedbackLogEntry] = []

    def frozen(seq: int) -> bool:
        return freeze_after is not None and seq >= freeze_after

    seq = -1
    for event in events:
        seq += 1
        if isinstance(event, ApplicantEvent):
            try:
                validate_event(event, config.feature_dim)
                params, ensemble = store.resolve(seq)
                frame = ingestor.process(event, params)
            except (DimensionMismatch, NonFiniteFeature, OutOfOrderEvent):
                stats.skipped_events += 1
                continue
            stats.accepted += 1
            assessment = assess(frame, params, ensemble, event.event_time_ms)
            kind = decide(assessment.pd, state, config.review_band)
            ranked = assessment.attributions.top_k[:top_k]
            records.append(
                DecisionRecord(
                    applicant_id=event.applicant_id,
                    decision=kind,
                    assessment=assessment,
                    tau_used=state.tau,
                    band_used=config.review_band,
                    ingress_seq=seq,
                    latency_us=0,
                    decided_at_ms=event.event_time_ms,
                    explanation=tuple((i, assessment.attributions.values[i]) for i in ranked),
                )
            )
            stats.decisions += 1
            stats.latency_us.append(0)
            if not frozen(seq):
                engine.add_pending(
                    event.applicant_id,
                    PendingDecision(frame, assessment.pd, kind, event.event_time_ms),
                )
        else:
            stats.outcomes_seen += 1
            if frozen(seq):
                stats.frozen_outcomes += 1
                continue
            result = engine.process_outcome(event)
            if result.status == "no_pending":
                stats.orphan_outcomes += 1
                continue
            if result.status == "stale":
                stats.stale_outcomes += 1
                continue
            stats.outcomes_joined += 1
            if result.publication is None:
                continue
            store.publish(seq, result.publication)
            summary = result.summary
            stats.params_published += 1
            stats.windows_completed += 1
            log.append(
                FeedbackLogEntry(
                    kind="params_published",
                    seq=seq,
                    window_index=summary.index,
                    version=result.publication.version,
                    metric=summary.metric,
                    delta=summary.delta,
                )
            )
            if summary.loss is not None:
                state = update_threshold(
                    state, summary.loss, config.eta, config.tau_min, config.tau_max
                )
                log.append(
                    FeedbackLogEntry(
                        kind="loss_window",
                        seq=seq,
                        window_index=summary.index,
                        loss=summary.loss,
                    )
                )
            if summary.drift:
                stats.drift_flags += 1
                log.append(
                    FeedbackLogEntry(
                        kind="drift_flag",
                        seq=seq,
                        window_index=summary.index,
                        metric=summary.metric,
                        delta=summary.delta,
                    )
                )

    stats.duplicate_pending = engine.buffer.duplicates
    stats.evicted_pending = engine.buffer.evictions
    stats.final_tau = state.tau
    stats.final_params_version = store.latest_version
    return PipelineResult(records, log, stats)
