"""riskstream: a streaming credit-risk decision engine.

An agent pipeline that normalizes application features on the fly, scores
probability of default with an online-learned logistic model, explains each
decision with analytic attributions, adapts its approval threshold to
realized losses, and detects concept drift from rolling metrics. Ships with
a synthetic borrower simulator, a frozen-baseline comparator, and a
deterministic, byte-replayable audit trail.
"""

__version__ = "0.1.0"

from .domain import (
    ApplicantEvent,
    ConfigError,
    DimensionMismatch,
    EngineConfig,
    EngineError,
    NonFiniteFeature,
    OutcomeEvent,
    OutOfOrderEvent,
    ScorerParams,
    default_config,
    initial_params,
    validate_config,
    validate_event,
)
from .ingest import FeatureFrame, Ingestor, RunningStats, StreamWindow
from .policy import DecisionKind, ThresholdState, decide, update_threshold
from .scoring import (
    AttributionVector,
    RiskAssessment,
    ScorerEnsemble,
    assess,
    attribute,
    confidence,
    linear_index,
    probability_of_default,
)
from .feedback import (
    DriftMonitor,
    FeedbackEngine,
    LabelJoinBuffer,
    detect_drift,
    rolling_metric,
    sgd_update,
    window_loss,
)
from .runtime import (
    CollectorSink,
    DecisionRecord,
    PipelineResult,
    PipelineStats,
    measure_latency,
    reference_execute,
    run_pipeline,
)
from .simharness import (
    DriftSpec,
    MetricsReport,
    ScenarioSpec,
    default_scenario,
    evaluate,
    generate_stream,
    run_comparison,
)

__all__ = [name for name in dir() if not name.startswith("_")]
