import numpy as np
import pytest

from riskstream.domain import ApplicantEvent, EngineConfig, ScorerParams, default_config
from riskstream.ingest import FeatureFrame, synthesize_features


@pytest.fixture
def config() -> EngineConfig:
    return default_config(2, metric_window=4)


def make_params(
    intercept=0.0,
    coefficients=(0.0, 0.0),
    feature_weights=None,
    fusion_coefficients=None,
    fusion_gain=0.0,
    version=0,
) -> ScorerParams:
    n = len(coefficients)
    return ScorerParams.make(
        version=version,
        intercept=intercept,
        coefficients=coefficients,
        feature_weights=feature_weights if feature_weights is not None else (1.0,) * n,
        fusion_coefficients=fusion_coefficients if fusion_coefficients is not None else (0.0,) * n,
        fusion_gain=fusion_gain,
    )


def make_frame(normalized, params: ScorerParams, applicant_id: str = "x") -> FeatureFrame:
    return synthesize_features(applicant_id, np.asarray(normalized, dtype=np.float64), params)


def make_event(applicant_id: str, t_ms: int, features) -> ApplicantEvent:
    return ApplicantEvent.make(applicant_id, t_ms, features)
