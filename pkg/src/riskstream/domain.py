"""Shared domain types, validation, and engine configuration."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

__all__ = [
    "EngineError",
    "ConfigError",
    "DimensionMismatch",
    "NonFiniteFeature",
    "OutOfOrderEvent",
    "InvalidLoss",
    "EmptyWindow",
    "NoSamples",
    "JoinError",
    "StreamFormatError",
    "ApplicantEvent",
    "OutcomeEvent",
    "ScorerParams",
    "EngineConfig",
    "validate_event",
    "validate_config",
    "initial_params",
    "default_config",
]


class EngineError(Exception):
    """Base class for every error the engine raises deliberately."""


class ConfigError(EngineError):
    """A configuration value violates its range or is missing; names the key."""

    def __init__(self, key: str, message: str) -> None:
        super().__init__(f"config key '{key}': {message}")
        self.key = key


class DimensionMismatch(EngineError):
    def __init__(self, expected: int, actual: int, what: str = "features") -> None:
        super().__init__(f"{what}: expected length {expected}, got {actual}")
        self.expected = expected
        self.actual = actual


class NonFiniteFeature(EngineError):
    def __init__(self, index: int) -> None:
        super().__init__(f"feature at index {index} is not finite")
        self.index = index


class OutOfOrderEvent(EngineError):
    def __init__(self, event_time_ms: int, last_time_ms: int) -> None:
        super().__init__(
            f"event time {event_time_ms} precedes last seen time {last_time_ms}"
        )
        self.event_time_ms = event_time_ms
        self.last_time_ms = last_time_ms


class InvalidLoss(EngineError):
    def __init__(self, loss: float) -> None:
        super().__init__(f"loss {loss} outside [0, 1]")
        self.loss = loss


class EmptyWindow(EngineError):
    pass


class NoSamples(EngineError):
    pass


class JoinError(EngineError):
    def __init__(self, applicant_id: str) -> None:
        super().__init__(f"applicant '{applicant_id}' has no matching truth record")
        self.applicant_id = applicant_id


class StreamFormatError(EngineError):
    """A stream/audit file failed to parse; carries the 1-based line number.

    Line number 0 marks a file-level problem (missing, unreadable).
    """

    def __init__(self, line_no: int, message: str) -> None:
        super().__init__(f"line {line_no}: {message}" if line_no > 0 else message)
        self.line_no = line_no


def _readonly_f64(values, dim: int | None, what: str) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1:
        raise DimensionMismatch(dim if dim is not None else 1, int(arr.size), what)
    if dim is not None and arr.size != dim:
        raise DimensionMismatch(dim, int(arr.size), what)
    arr = arr.copy()
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class ApplicantEvent:
    """One incoming loan application with its raw feature vector."""

    applicant_id: str
    event_time_ms: int
    raw_features: np.ndarray

    @classmethod
    def make(cls, applicant_id: str, event_time_ms: int, raw_features) -> "ApplicantEvent":
        return cls(applicant_id, int(event_time_ms), _readonly_f64(raw_features, None, "raw_features"))


@dataclass(frozen=True)
class OutcomeEvent:
    """Delayed repayment label joined back to a prior decision by applicant id."""

    applicant_id: str
    outcome_time_ms: int
    label: int  # 0 = repaid, 1 = defaulted


@dataclass(frozen=True, eq=False)
class ScorerParams:
    """A versioned, immutable snapshot of everything the scorer needs."""

    version: int
    intercept: float
    coefficients: np.ndarray
    feature_weights: np.ndarray
    fusion_coefficients: np.ndarray
    fusion_gain: float

    @classmethod
    def make(
        cls,
        version: int,
        intercept: float,
        coefficients,
        feature_weights,
        fusion_coefficients,
        fusion_gain: float,
    ) -> "ScorerParams":
        coef = _readonly_f64(coefficients, None, "coefficients")
        n = coef.size
        return cls(
            version=int(version),
            intercept=float(intercept),
            coefficients=coef,
            feature_weights=_readonly_f64(feature_weights, n, "feature_weights"),
            fusion_coefficients=_readonly_f64(fusion_coefficients, n, "fusion_coefficients"),
            fusion_gain=float(fusion_gain),
        )

    @property
    def dim(self) -> int:
        return int(self.coefficients.size)

    def with_version(self, version: int) -> "ScorerParams":
        return replace(self, version=int(version))


# Required keys of a config document, in canonical order.
CONFIG_KEYS = (
    "feature_dim",
    "eta",
    "gamma",
    "review_band",
    "tau_init",
    "tau_min",
    "tau_max",
    "window_capacity",
    "learning_rate",
    "ensemble_size",
    "metric_window",
    "pd_clip_epsilon",
    "seed",
    "deterministic_mode",
)

# Optional engineering knobs with safe defaults.
CONFIG_OPTIONAL_KEYS = (
    "fusion_coefficients",
    "explanation_top_k",
    "drift_boost_factor",
    "join_buffer_capacity",
    "queue_capacity",
    "batch_max",
    "scoring_shards",
)


@dataclass(frozen=True)
class EngineConfig:
    feature_dim: int
    eta: float
    gamma: float
    review_band: float
    tau_init: float
    tau_min: float
    tau_max: float
    window_capacity: int
    learning_rate: float
    ensemble_size: int
    metric_window: int
    pd_clip_epsilon: float
    seed: int
    deterministic_mode: bool
    fusion_coefficients: tuple[float, ...] | None = None
    explanation_top_k: int = 3
    drift_boost_factor: float = 2.0
    join_buffer_capacity: int = 100_000
    queue_capacity: int = 1024
    batch_max: int = 64
    scoring_shards: int = 1


def _require_int(config: EngineConfig, key: str, minimum: int) -> int:
    value = getattr(config, key)
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(key, f"expected integer, got {value!r}")
    if value < minimum:
        raise ConfigError(key, f"must be >= {minimum}, got {value}")
    return value


def _require_finite(config: EngineConfig, key: str) -> float:
    value = getattr(config, key)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(key, f"expected number, got {value!r}")
    value = float(value)
    if not math.isfinite(value):
        raise ConfigError(key, f"must be finite, got {value}")
    return value


def validate_config(config: EngineConfig) -> EngineConfig:
    """Check every range constraint; raises ConfigError naming the offending key.

    Returns the config unchanged on success, so validation is idempotent.
    """
    n = _require_int(config, "feature_dim", 1)
    _require_finite(config, "eta")
    if _require_finite(config, "gamma") <= 0.0:
        raise ConfigError("gamma", "must be > 0")
    if _require_finite(config, "review_band") < 0.0:
        raise ConfigError("review_band", "must be >= 0")

    tau_init = _require_finite(config, "tau_init")
    tau_min = _require_finite(config, "tau_min")
    tau_max = _require_finite(config, "tau_max")
    if not 0.0 < tau_min:
        raise ConfigError("tau_min", "must be > 0")
    if tau_min > tau_init:
        raise ConfigError("tau_min", f"must be <= tau_init ({tau_init}), got {tau_min}")
    if tau_init > tau_max:
        raise ConfigError("tau_init", f"must be <= tau_max ({tau_max}), got {tau_init}")
    if not tau_max < 1.0:
        raise ConfigError("tau_max", "must be < 1")

    _require_int(config, "window_capacity", 1)
    if _require_finite(config, "learning_rate") <= 0.0:
        raise ConfigError("learning_rate", "must be > 0")
    _require_int(config, "ensemble_size", 1)
    _require_int(config, "metric_window", 1)
    eps = _require_finite(config, "pd_clip_epsilon")
    if not 0.0 < eps < 0.5:
        raise ConfigError("pd_clip_epsilon", f"must be in (0, 0.5), got {eps}")
    seed = getattr(config, "seed")
    if isinstance(seed, bool) or not isinstance(seed, int):
        raise ConfigError("seed", f"expected integer, got {seed!r}")
    if not 0 <= seed < 2**64:
        raise ConfigError("seed", "must fit an unsigned 64-bit integer")
    if not isinstance(config.deterministic_mode, bool):
        raise ConfigError("deterministic_mode", "expected boolean")

    if config.fusion_coefficients is not None:
        alphas = config.fusion_coefficients
        if len(alphas) != n:
            raise ConfigError(
                "fusion_coefficients", f"expected {n} values, got {len(alphas)}"
            )
        for a in alphas:
            if not math.isfinite(float(a)):
                raise ConfigError("fusion_coefficients", "values must be finite")
    _require_int(config, "explanation_top_k", 1)
    if _require_finite(config, "drift_boost_factor") < 1.0:
        raise ConfigError("drift_boost_factor", "must be >= 1")
    _require_int(config, "join_buffer_capacity", 1)
    _require_int(config, "queue_capacity", 1)
    _require_int(config, "batch_max", 1)
    _require_int(config, "scoring_shards", 1)
    return config


def default_config(feature_dim: int, **overrides) -> EngineConfig:
    """A validated config with workable defaults; overrides applied on top."""
    base = dict(
        feature_dim=feature_dim,
        eta=-0.1,
        gamma=0.15,
        review_band=0.02,
        tau_init=0.5,
        tau_min=0.05,
        tau_max=0.95,
        window_capacity=256,
        learning_rate=0.05,
        ensemble_size=4,
        metric_window=200,
        pd_clip_epsilon=1e-6,
        seed=0,
        deterministic_mode=True,
    )
    base.update(overrides)
    return validate_config(EngineConfig(**base))


def initial_params(config: EngineConfig) -> ScorerParams:
    """Version-0 parameters: zero index, identity weights, configured fusion terms."""
    n = config.feature_dim
    alphas = config.fusion_coefficients if config.fusion_coefficients is not None else [0.0] * n
    return ScorerParams.make(
        version=0,
        intercept=0.0,
        coefficients=np.zeros(n),
        feature_weights=np.ones(n),
        fusion_coefficients=alphas,
        fusion_gain=0.0,
    )


def validate_event(event: ApplicantEvent, expected_dim: int) -> ApplicantEvent:
    """Return the event unchanged iff its feature vector is well formed.

    Raises DimensionMismatch on a wrong length and NonFiniteFeature (with the
    offending index) on NaN or infinity. Idempotent by construction.
    """
    features = event.raw_features
    if features.size != expected_dim:
        raise DimensionMismatch(expected_dim, int(features.size))
    finite = np.isfinite(features)
    if not finite.all():
        raise NonFiniteFeature(int(np.argmin(finite)))
    return event
