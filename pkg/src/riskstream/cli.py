"""Command-line interface: file formats, canonical serialization, subcommands.

All engine files are JSON (documents) or JSON Lines (streams). Audit and
manifest writing is canonical: fixed key order and 17-significant-digit
decimal floats, so a deterministic re-run reproduces the bytes exactly.
Every file write goes through a temp-file-plus-rename, so a killed run never
leaves a truncated file at the destination path.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .domain import (
    ApplicantEvent,
    ConfigError,
    CONFIG_KEYS,
    CONFIG_OPTIONAL_KEYS,
    EngineConfig,
    EngineError,
    OutcomeEvent,
    StreamFormatError,
    default_config,
    validate_config,
)
from .policy import DecisionKind
from .runtime import (
    DecisionRecord,
    FeedbackLogEntry,
    PipelineResult,
    run_pipeline,
)
from .scoring import AttributionVector, RiskAssessment
from .simharness import (
    DriftSpec,
    ScenarioSpec,
    Truth,
    default_scenario,
    evaluate,
    generate_stream,
    run_comparison,
    validate_scenario,
)

__all__ = [
    "canonical_json",
    "encode_record",
    "parse_audit_line",
    "load_events",
    "write_events",
    "load_config",
    "config_to_dict",
    "load_scenario",
    "scenario_to_dict",
    "RunManifest",
    "atomic_write_text",
    "main",
]


class ReplayMismatch(EngineError):
    def __init__(self, line_no: int) -> None:
        super().__init__(f"replayed audit diverges at line {line_no}")
        self.line_no = line_no


# ---------------------------------------------------------------------------
# canonical serialization


def _fmt_float(x: float) -> str:
    if not math.isfinite(x):
        raise ValueError(f"non-finite value {x} cannot be serialized canonically")
    return format(x, ".17g")


def canonical_json(value) -> str:
    """Deterministic JSON: insertion-ordered keys, .17g floats, no whitespace."""
    if value is None:
        return "null"
    if value is True:
        return "true"
    if value is False:
        return "false"
    if isinstance(value, str):
        return json.dumps(value, ensure_ascii=False)
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return _fmt_float(value)
    if isinstance(value, dict):
        inner = ",".join(
            f"{json.dumps(str(k), ensure_ascii=False)}:{canonical_json(v)}"
            for k, v in value.items()
        )
        return "{" + inner + "}"
    if isinstance(value, (list, tuple)):
        return "[" + ",".join(canonical_json(v) for v in value) + "]"
    raise TypeError(f"cannot canonically serialize {type(value).__name__}")


def atomic_write_text(path: Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + f".tmp.{os.getpid()}")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


# ---------------------------------------------------------------------------
# audit records


def record_to_dict(record: DecisionRecord) -> dict:
    a = record.assessment
    return {
        "id": record.applicant_id,
        "seq": record.ingress_seq,
        "decision": record.decision.value,
        "pd": a.pd,
        "confidence": a.confidence,
        "params_version": a.params_version,
        "tau": record.tau_used,
        "band": record.band_used,
        "scored_at_ms": a.scored_at_ms,
        "decided_at_ms": record.decided_at_ms,
        "latency_us": record.latency_us,
        "attributions": list(a.attributions.values),
        "ranking": list(a.attributions.top_k),
        "explanation": [[i, v] for i, v in record.explanation],
    }


def encode_record(record: DecisionRecord) -> str:
    return canonical_json(record_to_dict(record))


def record_from_dict(obj: dict) -> DecisionRecord:
    attributions = AttributionVector(
        values=tuple(float(v) for v in obj["attributions"]),
        top_k=tuple(int(i) for i in obj["ranking"]),
    )
    assessment = RiskAssessment(
        applicant_id=obj["id"],
        pd=float(obj["pd"]),
        confidence=float(obj["confidence"]),
        attributions=attributions,
        params_version=int(obj["params_version"]),
        scored_at_ms=int(obj["scored_at_ms"]),
    )
    return DecisionRecord(
        applicant_id=obj["id"],
        decision=DecisionKind(obj["decision"]),
        assessment=assessment,
        tau_used=float(obj["tau"]),
        band_used=float(obj["band"]),
        ingress_seq=int(obj["seq"]),
        latency_us=int(obj["latency_us"]),
        decided_at_ms=int(obj["decided_at_ms"]),
        explanation=tuple((int(i), float(v)) for i, v in obj["explanation"]),
    )


def parse_audit_line(line: str, line_no: int) -> DecisionRecord:
    try:
        return record_from_dict(json.loads(line))
    except (ValueError, KeyError, TypeError) as exc:
        raise StreamFormatError(line_no, f"bad audit record: {exc}") from exc


def audit_text(records) -> str:
    return "".join(encode_record(r) + "\n" for r in records)


def load_audit(path: Path) -> list[DecisionRecord]:
    records = []
    try:
        fh = open(path, encoding="utf-8")
    except FileNotFoundError:
        raise StreamFormatError(0, f"audit file not found: {path}")
    with fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            records.append(parse_audit_line(line, line_no))
    return records


def feedback_entry_to_dict(entry: FeedbackLogEntry) -> dict:
    return {
        "kind": entry.kind,
        "seq": entry.seq,
        "window_index": entry.window_index,
        "version": entry.version,
        "metric": entry.metric,
        "delta": entry.delta,
        "loss": entry.loss,
    }


def feedback_text(entries) -> str:
    return "".join(canonical_json(feedback_entry_to_dict(e)) + "\n" for e in entries)


# ---------------------------------------------------------------------------
# event streams


def event_to_dict(event) -> dict:
    if isinstance(event, ApplicantEvent):
        return {
            "type": "application",
            "id": event.applicant_id,
            "t_ms": event.event_time_ms,
            "features": [float(x) for x in event.raw_features.tolist()],
        }
    return {
        "type": "outcome",
        "id": event.applicant_id,
        "t_ms": event.outcome_time_ms,
        "label": event.label,
    }


def events_text(events) -> str:
    return "".join(canonical_json(event_to_dict(e)) + "\n" for e in events)


def write_events(path: Path, events) -> None:
    atomic_write_text(path, events_text(events))


def _parse_event_obj(obj: dict, line_no: int):
    kind = obj.get("type")
    if kind == "application":
        if not isinstance(obj.get("id"), str):
            raise StreamFormatError(line_no, "application needs a string 'id'")
        t_ms = obj.get("t_ms")
        if isinstance(t_ms, bool) or not isinstance(t_ms, int):
            raise StreamFormatError(line_no, "'t_ms' must be an integer")
        features = obj.get("features")
        if not isinstance(features, list):
            raise StreamFormatError(line_no, "'features' must be a list of numbers")
        try:
            return ApplicantEvent.make(obj["id"], t_ms, [float(x) for x in features])
        except (TypeError, ValueError) as exc:
            raise StreamFormatError(line_no, f"bad feature values: {exc}") from exc
    if kind == "outcome":
        if not isinstance(obj.get("id"), str):
            raise StreamFormatError(line_no, "outcome needs a string 'id'")
        t_ms = obj.get("t_ms")
        if isinstance(t_ms, bool) or not isinstance(t_ms, int):
            raise StreamFormatError(line_no, "'t_ms' must be an integer")
        label = obj.get("label")
        if label not in (0, 1) or isinstance(label, bool):
            raise StreamFormatError(line_no, "'label' must be 0 or 1")
        return OutcomeEvent(obj["id"], t_ms, label)
    raise StreamFormatError(line_no, f"unknown event type {kind!r}")


def load_events(path: Path) -> list:
    events = []
    try:
        fh = open(path, encoding="utf-8")
    except FileNotFoundError:
        raise StreamFormatError(0, f"event file not found: {path}")
    with fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except ValueError as exc:
                raise StreamFormatError(line_no, f"invalid JSON: {exc}") from exc
            if not isinstance(obj, dict):
                raise StreamFormatError(line_no, "event line must be a JSON object")
            events.append(_parse_event_obj(obj, line_no))
    return events


# ---------------------------------------------------------------------------
# config and scenario documents


def config_to_dict(config: EngineConfig) -> dict:
    out = {key: getattr(config, key) for key in CONFIG_KEYS}
    for key in CONFIG_OPTIONAL_KEYS:
        value = getattr(config, key)
        out[key] = list(value) if isinstance(value, tuple) else value
    return out


def config_from_dict(raw: dict) -> EngineConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config", "config document must be a JSON object")
    for key in CONFIG_KEYS:
        if key not in raw:
            raise ConfigError(key, "missing required key")
    known = set(CONFIG_KEYS) | set(CONFIG_OPTIONAL_KEYS)
    for key in raw:
        if key not in known:
            raise ConfigError(key, "unknown key")
    kwargs = dict(raw)
    fusion = kwargs.get("fusion_coefficients")
    if fusion is not None:
        kwargs["fusion_coefficients"] = tuple(float(x) for x in fusion)
    return validate_config(EngineConfig(**kwargs))


def load_config(path: Path) -> EngineConfig:
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError("config", f"config file not found: {path}")
    except ValueError as exc:
        raise ConfigError("config", f"invalid JSON: {exc}")
    return config_from_dict(raw)


def scenario_to_dict(spec: ScenarioSpec) -> dict:
    return {
        "n_events": spec.n_events,
        "feature_dim": spec.feature_dim,
        "true_intercept": spec.true_intercept,
        "true_coefficients": list(spec.true_coefficients),
        "feature_means": list(spec.feature_means),
        "feature_stds": list(spec.feature_stds),
        "label_delay_events": spec.label_delay_events,
        "seed": spec.seed,
        "drift": None
        if spec.drift is None
        else {
            "at_event": spec.drift.at_event,
            "new_intercept": spec.drift.new_intercept,
            "new_coefficients": list(spec.drift.new_coefficients),
        },
    }


def scenario_from_dict(raw: dict) -> ScenarioSpec:
    required = (
        "n_events",
        "feature_dim",
        "true_intercept",
        "true_coefficients",
        "feature_means",
        "feature_stds",
        "label_delay_events",
        "seed",
    )
    for key in required:
        if key not in raw:
            raise ConfigError(key, "missing required scenario key")
    drift = None
    if raw.get("drift") is not None:
        d = raw["drift"]
        for key in ("at_event", "new_intercept", "new_coefficients"):
            if key not in d:
                raise ConfigError(f"drift.{key}", "missing required scenario key")
        drift = DriftSpec(
            at_event=int(d["at_event"]),
            new_intercept=float(d["new_intercept"]),
            new_coefficients=tuple(float(x) for x in d["new_coefficients"]),
        )
    return validate_scenario(
        ScenarioSpec(
            n_events=int(raw["n_events"]),
            feature_dim=int(raw["feature_dim"]),
            true_intercept=float(raw["true_intercept"]),
            true_coefficients=tuple(float(x) for x in raw["true_coefficients"]),
            feature_means=tuple(float(x) for x in raw["feature_means"]),
            feature_stds=tuple(float(x) for x in raw["feature_stds"]),
            label_delay_events=int(raw["label_delay_events"]),
            seed=int(raw["seed"]),
            drift=drift,
        )
    )


def load_scenario(path: Path) -> ScenarioSpec:
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError("scenario", f"scenario file not found: {path}")
    except ValueError as exc:
        raise ConfigError("scenario", f"invalid JSON: {exc}")
    return scenario_from_dict(raw)


# ---------------------------------------------------------------------------
# run manifest


@dataclass(frozen=True)
class RunManifest:
    """Everything needed to reproduce and verify one audited run.

    A "score" manifest points at the input event file; a "simulate" manifest
    embeds the generating scenario, and its seed drives stream regeneration on
    replay (so a tampered seed forces a divergent audit).
    """

    kind: str  # "score" | "simulate"
    engine_version: str
    created_utc: str
    finished_utc: str
    deterministic: bool
    seed: int
    input_path: str | None
    scenario: dict | None
    audit_path: str
    feedback_path: str
    audit_sha256: str
    counters: dict
    config: dict

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "engine_version": self.engine_version,
            "created_utc": self.created_utc,
            "finished_utc": self.finished_utc,
            "deterministic": self.deterministic,
            "seed": self.seed,
            "input_path": self.input_path,
            "scenario": self.scenario,
            "audit_path": self.audit_path,
            "feedback_path": self.feedback_path,
            "audit_sha256": self.audit_sha256,
            "counters": self.counters,
            "config": self.config,
        }


def _utcnow() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="microseconds")


def _sha256(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


# ---------------------------------------------------------------------------
# report documents


def _write_series_csv(path: Path, header: list[str], rows: list[list]) -> None:
    def cell(v) -> str:
        if v is None:
            return ""
        if isinstance(v, float):
            return f"{v:.6f}"
        return str(v)

    lines = [",".join(header)] + [",".join(cell(v) for v in row) for row in rows]
    atomic_write_text(path, "\n".join(lines) + "\n")


def write_report_files(
    report_path: Path,
    document: dict,
    adaptive,
    baseline=None,
) -> None:
    """Write report.json plus the plot-ready CSV series next to it."""
    report_path = Path(report_path)
    atomic_write_text(report_path, canonical_json(document) + "\n")
    base = report_path.parent

    rows = []
    b_rolling = {w.index: w for w in (baseline.rolling if baseline else ())}
    for w in adaptive.rolling:
        b = b_rolling.get(w.index)
        rows.append(
            [w.index, w.accuracy, w.log_loss, b.accuracy if b else None, b.log_loss if b else None]
        )
    _write_series_csv(
        base / "series_rolling_accuracy.csv",
        ["window_index", "adaptive_accuracy", "adaptive_log_loss", "baseline_accuracy", "baseline_log_loss"],
        rows,
    )

    edges = adaptive.histogram_edges
    hist_rows = [
        [edges[i], edges[i + 1], adaptive.histogram_repaid[i], adaptive.histogram_defaulted[i]]
        for i in range(len(edges) - 1)
    ]
    _write_series_csv(
        base / "series_score_histogram.csv",
        ["bin_lo", "bin_hi", "repaid", "defaulted"],
        hist_rows,
    )

    if adaptive.latency is not None:
        lat = adaptive.latency
        _write_series_csv(
            base / "series_latency.csv",
            ["stat", "value_us"],
            [
                ["p50", lat.p50_us],
                ["p99", lat.p99_us],
                ["max", lat.max_us],
                ["mean", lat.mean_us],
            ],
        )


# ---------------------------------------------------------------------------
# subcommands


def _write_run_outputs(
    result: PipelineResult,
    config: EngineConfig,
    audit_path: Path,
    feedback_path: Path,
    manifest_path: Path,
    deterministic: bool,
    created_utc: str,
    *,
    kind: str,
    input_path: Path | None = None,
    scenario: dict | None = None,
    seed: int | None = None,
) -> None:
    text = audit_text(result.records)
    atomic_write_text(audit_path, text)
    atomic_write_text(feedback_path, feedback_text(result.feedback_log))
    manifest = RunManifest(
        kind=kind,
        engine_version=__version__,
        created_utc=created_utc,
        finished_utc=_utcnow(),
        deterministic=deterministic,
        seed=config.seed if seed is None else seed,
        input_path=None if input_path is None else str(Path(input_path).resolve()),
        scenario=scenario,
        audit_path=str(Path(audit_path).resolve()),
        feedback_path=str(Path(feedback_path).resolve()),
        audit_sha256=_sha256(text),
        counters=result.stats.counters(),
        config=config_to_dict(config),
    )
    atomic_write_text(manifest_path, canonical_json(manifest.to_dict()) + "\n")


def _sibling(primary: Path, override, suffix: str) -> Path:
    if override:
        return Path(override)
    return primary.with_name(primary.stem + suffix)


def cmd_score(args) -> int:
    config = load_config(args.config)
    events = load_events(args.input)
    deterministic = True if args.deterministic else config.deterministic_mode
    audit_path = Path(args.audit)
    created = _utcnow()
    result = run_pipeline(events, config, deterministic=deterministic)
    _write_run_outputs(
        result,
        config,
        audit_path,
        _sibling(audit_path, args.feedback, ".feedback.jsonl"),
        _sibling(audit_path, args.manifest, ".manifest.json"),
        deterministic,
        created,
        kind="score",
        input_path=Path(args.input),
    )
    print(
        f"scored {result.stats.decisions} decisions "
        f"({result.stats.skipped_events} skipped, {result.stats.drift_flags} drift flags) "
        f"-> {audit_path}"
    )
    return 0


def cmd_simulate(args) -> int:
    spec = load_scenario(args.scenario)
    config = load_config(args.config)
    if args.seed is not None:
        spec = validate_scenario(replace(spec, seed=args.seed))
    deterministic = True if args.deterministic else config.deterministic_mode
    created = _utcnow()

    if args.emit_stream:
        write_events(Path(args.emit_stream), generate_stream(spec).events)

    document = {
        "engine_version": __version__,
        "scenario": scenario_to_dict(spec),
        "config": config_to_dict(config),
        "warmup_events": None,
        "adaptive": None,
        "baseline": None,
    }
    if args.compare_baseline:
        comparison = run_comparison(spec, config, deterministic=deterministic)
        adaptive, baseline = comparison.adaptive, comparison.baseline
        adaptive_result = comparison.adaptive_result
        document["warmup_events"] = comparison.warmup_events
        document["adaptive"] = adaptive.to_dict()
        document["baseline"] = baseline.to_dict()
    else:
        gen = generate_stream(spec)
        adaptive_result = run_pipeline(gen.events, config, deterministic=deterministic)
        pipelined = adaptive_result.stats.mode == "pipelined"
        stats = adaptive_result.stats
        adaptive = evaluate(
            adaptive_result.records,
            gen.truth,
            config.metric_window,
            clip_eps=config.pd_clip_epsilon,
            latency=stats.latency_summary() if pipelined and stats.latency_us else None,
            throughput=stats.throughput if pipelined else None,
            mode=stats.mode,
        )
        baseline = None
        document["adaptive"] = adaptive.to_dict()

    report_path = Path(args.report)
    write_report_files(report_path, document, adaptive, baseline)
    audit_path = _sibling(report_path, args.audit, ".audit.jsonl")
    _write_run_outputs(
        adaptive_result,
        config,
        audit_path,
        _sibling(report_path, None, ".feedback.jsonl"),
        _sibling(report_path, args.manifest, ".manifest.json"),
        deterministic,
        created,
        kind="simulate",
        scenario=scenario_to_dict(spec),
        seed=spec.seed,
    )
    acc = adaptive.accuracy
    print(
        f"simulated {spec.n_events} applications; adaptive accuracy "
        f"{'n/a' if acc is None else f'{acc:.4f}'} -> {args.report}"
    )
    return 0


def cmd_replay(args) -> int:
    manifest_path = Path(args.manifest)
    try:
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise StreamFormatError(0, f"manifest not found: {manifest_path}")
    except ValueError as exc:
        raise StreamFormatError(0, f"manifest is not valid JSON: {exc}")

    config = config_from_dict(manifest["config"])
    audit_path = Path(manifest["audit_path"])
    if not audit_path.exists():
        raise StreamFormatError(0, f"recorded audit not found: {audit_path}")
    if manifest.get("kind") == "simulate":
        spec = scenario_from_dict(manifest["scenario"])
        spec = validate_scenario(replace(spec, seed=int(manifest["seed"])))
        events = generate_stream(spec).events
    else:
        input_path = Path(manifest["input_path"])
        if not input_path.exists():
            raise StreamFormatError(0, f"input file not found: {input_path}")
        events = load_events(input_path)
    result = run_pipeline(events, config, deterministic=bool(manifest["deterministic"]))
    regenerated = audit_text(result.records)
    recorded = audit_path.read_text(encoding="utf-8")
    if regenerated == recorded:
        print(f"replay ok: {len(result.records)} decisions match {audit_path}")
        return 0
    rec_lines = recorded.splitlines()
    new_lines = regenerated.splitlines()
    divergent = len(rec_lines) + 1
    for i, (a, b) in enumerate(zip(rec_lines, new_lines), start=1):
        if a != b:
            divergent = i
            break
    else:
        if len(new_lines) != len(rec_lines):
            divergent = min(len(rec_lines), len(new_lines)) + 1
    raise ReplayMismatch(divergent)


def cmd_report(args) -> int:
    records = load_audit(Path(args.audit))
    truth: dict[str, Truth] = {}
    for event in load_events(Path(args.truth)):
        if isinstance(event, OutcomeEvent):
            truth[event.applicant_id] = Truth(event.label, float(event.label), False)
    report = evaluate(records, truth, args.window, clip_eps=args.clip_eps)
    document = {
        "engine_version": __version__,
        "audit": str(Path(args.audit).resolve()),
        "truth": str(Path(args.truth).resolve()),
        "adaptive": report.to_dict(),
        "baseline": None,
    }
    write_report_files(Path(args.report), document, report)
    acc = report.accuracy
    print(
        f"evaluated {report.total_records} decisions; accuracy "
        f"{'n/a' if acc is None else f'{acc:.4f}'} -> {args.report}"
    )
    return 0


def cmd_bench(args) -> int:
    if args.config:
        config = load_config(args.config)
    else:
        config = default_config(
            args.features,
            deterministic_mode=False,
            scoring_shards=args.shards,
            batch_max=args.batch,
        )
    spec = default_scenario(
        feature_dim=config.feature_dim, n_events=args.events, seed=args.seed
    )
    gen = generate_stream(spec)
    result = run_pipeline(gen.events, config, deterministic=False)
    stats = result.stats
    latency = stats.latency_summary()
    throughput = stats.throughput or 0.0
    print(
        f"bench: {stats.decisions} decisions in {stats.elapsed_s:.3f}s "
        f"= {throughput:,.0f}/s | latency p50 {latency.p50_us}us "
        f"p99 {latency.p99_us}us max {latency.max_us}us"
    )
    if args.report:
        document = {
            "engine_version": __version__,
            "features": config.feature_dim,
            "events": args.events,
            "decisions": stats.decisions,
            "elapsed_s": stats.elapsed_s,
            "throughput_per_s": throughput,
            "latency": {
                "count": latency.count,
                "p50_us": latency.p50_us,
                "p99_us": latency.p99_us,
                "max_us": latency.max_us,
                "mean_us": latency.mean_us,
            },
            "queue_highwater": dict(sorted(stats.queue_highwater.items())),
        }
        atomic_write_text(Path(args.report), canonical_json(document) + "\n")
    return 0


# ---------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="riskstream",
        description="Streaming credit-risk decision engine",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("score", help="score an event stream and write the audit log")
    p.add_argument("--input", required=True, help="events.jsonl to score")
    p.add_argument("--config", required=True, help="engine config.json")
    p.add_argument("--audit", required=True, help="audit.jsonl output path")
    p.add_argument("--manifest", default=None, help="manifest output path")
    p.add_argument("--feedback", default=None, help="feedback log output path")
    p.add_argument("--deterministic", action="store_true", help="force deterministic mode")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("simulate", help="generate a synthetic stream and evaluate the engine")
    p.add_argument("--scenario", required=True, help="scenario.json")
    p.add_argument("--config", required=True, help="engine config.json")
    p.add_argument("--report", required=True, help="report.json output path")
    p.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    p.add_argument("--compare-baseline", action="store_true", help="also run the frozen baseline")
    p.add_argument("--emit-stream", default=None, help="also write the generated events.jsonl")
    p.add_argument("--audit", default=None, help="audit output path (default: next to report)")
    p.add_argument("--manifest", default=None, help="manifest output path (default: next to report)")
    p.add_argument("--deterministic", action="store_true", help="force deterministic mode")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("replay", help="re-run a manifest and verify the audit bytes")
    p.add_argument("--manifest", required=True, help="manifest.json from a previous run")
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("report", help="recompute metrics from an audit and a truth stream")
    p.add_argument("--audit", required=True, help="audit.jsonl")
    p.add_argument("--truth", required=True, help="events.jsonl carrying the outcomes")
    p.add_argument("--report", required=True, help="report.json output path")
    p.add_argument("--window", type=int, default=200, help="rolling window size")
    p.add_argument("--clip-eps", type=float, default=1e-6, help="log-loss clipping epsilon")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("bench", help="measure pipelined throughput and decision latency")
    p.add_argument("--features", type=int, default=16)
    p.add_argument("--events", type=int, default=20000)
    p.add_argument("--seed", type=int, default=11)
    p.add_argument("--shards", type=int, default=1)
    p.add_argument("--batch", type=int, default=64)
    p.add_argument("--config", default=None, help="optional engine config.json")
    p.add_argument("--report", default=None, help="optional bench report.json")
    p.set_defaults(func=cmd_bench)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except StreamFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except ReplayMismatch as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except EngineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
