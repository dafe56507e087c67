"""Risk scoring: logistic default probability, gradient attributions, ensemble confidence."""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass

import numpy as np

from .domain import DimensionMismatch, ScorerParams
from .ingest import FeatureFrame

__all__ = [
    "AttributionVector",
    "ScorerEnsemble",
    "RiskAssessment",
    "linear_index",
    "probability_of_default",
    "pd_from_normalized",
    "pd_from_parts",
    "ensemble_pds",
    "attribute",
    "confidence",
    "assess",
    "assess_batch",
]

# Probability outputs are kept strictly inside (0, 1) even when the linear
# index saturates the exponential.
_PD_FLOOR = sys.float_info.min
_PD_CEIL = math.nextafter(1.0, 0.0)


def _logistic(z: float) -> float:
    # Both branches exponentiate a non-positive argument, so the exp can
    # underflow to 0.0 but never overflow.
    if z >= 0.0:
        p = 1.0 / (1.0 + math.exp(-z))
    else:
        e = math.exp(z)
        p = e / (1.0 + e)
    if p < _PD_FLOOR:
        return _PD_FLOOR
    if p > _PD_CEIL:
        return _PD_CEIL
    return p


def _logistic_vec(z: np.ndarray) -> np.ndarray:
    e = np.exp(-np.abs(z))
    p = np.where(z >= 0.0, 1.0 / (1.0 + e), e / (1.0 + e))
    return np.clip(p, _PD_FLOOR, _PD_CEIL)


@dataclass(frozen=True, slots=True)
class AttributionVector:
    """Per-feature sensitivities of the default probability.

    values[i] is the partial derivative of PD with respect to normalized
    feature i; top_k orders all indices by |value| descending, ties broken by
    the lower index.
    """

    values: tuple[float, ...]
    top_k: tuple[int, ...]


@dataclass(frozen=True, eq=False)
class ScorerEnsemble:
    """The K most recent parameter snapshots, newest first.

    Padded by duplicating the oldest snapshot while fewer than K exist, so the
    ensemble always holds exactly K entries. The stacked matrices fold every
    snapshot's linear index into two mat-vecs, so re-scoring a frame under all
    K snapshots costs a couple of numpy calls instead of K separate passes:
    z_k = intercepts[k] + linear_terms[k] . F + fusion_terms[k] . F^2.
    """

    snapshots: tuple[ScorerParams, ...]
    intercepts: np.ndarray
    linear_terms: np.ndarray
    fusion_terms: np.ndarray

    @classmethod
    def build(cls, newest_first: list[ScorerParams], k: int) -> "ScorerEnsemble":
        if not newest_first or k < 1:
            raise ValueError("ensemble needs at least one snapshot and k >= 1")
        taken = list(newest_first[:k])
        while len(taken) < k:
            taken.append(taken[-1])
        return cls(
            snapshots=tuple(taken),
            intercepts=np.array([p.intercept for p in taken]),
            linear_terms=np.stack([p.coefficients * p.feature_weights for p in taken]),
            fusion_terms=np.stack([p.fusion_gain * p.fusion_coefficients for p in taken]),
        )


@dataclass(frozen=True, slots=True)
class RiskAssessment:
    applicant_id: str
    pd: float
    confidence: float
    attributions: AttributionVector
    params_version: int
    scored_at_ms: int


def _check_dims(frame: FeatureFrame, params: ScorerParams) -> None:
    if frame.normalized.size != params.dim:
        raise DimensionMismatch(params.dim, int(frame.normalized.size))


def linear_index(frame: FeatureFrame, params: ScorerParams) -> float:
    """z = intercept + coefficients . weighted + fusion_gain * fusion."""
    _check_dims(frame, params)
    return (
        params.intercept
        + float(np.dot(params.coefficients, frame.weighted))
        + params.fusion_gain * frame.fusion
    )


def _index_from_normalized(params: ScorerParams, normalized: np.ndarray) -> float:
    # Recomputes the weighted and fusion terms under the given snapshot, so a
    # frame built under one parameter version can be scored under another.
    weighted = params.feature_weights * normalized
    fusion = float(np.dot(params.fusion_coefficients, normalized * normalized))
    return (
        params.intercept
        + float(np.dot(params.coefficients, weighted))
        + params.fusion_gain * fusion
    )


def probability_of_default(frame: FeatureFrame, params: ScorerParams) -> float:
    """Logistic mapping of the linear index, clamped strictly inside (0, 1)."""
    return _logistic(linear_index(frame, params))


def pd_from_normalized(params: ScorerParams, normalized: np.ndarray) -> float:
    return _logistic(_index_from_normalized(params, normalized))


def pd_from_parts(params: ScorerParams, weighted: np.ndarray, fusion: float) -> float:
    """PD from an already-weighted feature vector and fusion value."""
    return _logistic(
        params.intercept
        + float(np.dot(params.coefficients, weighted))
        + params.fusion_gain * fusion
    )


def attribute(
    frame: FeatureFrame, params: ScorerParams, pd: float | None = None
) -> AttributionVector:
    """Analytic gradient of PD with respect to each normalized feature.

    Chain rule through both input paths of the index:
        dPD/dF_i = PD (1 - PD) * (coefficients[i] * feature_weights[i]
                                  + 2 * fusion_gain * fusion_coefficients[i] * F_i)

    Accepts an already-computed PD for the frame to avoid rescoring.
    """
    _check_dims(frame, params)
    p = probability_of_default(frame, params) if pd is None else pd
    slope = p * (1.0 - p)
    grads = slope * (
        params.coefficients * params.feature_weights
        + 2.0 * params.fusion_gain * params.fusion_coefficients * frame.normalized
    )
    order = np.argsort(-np.abs(grads), kind="stable")
    return AttributionVector(tuple(grads.tolist()), tuple(int(i) for i in order))


def ensemble_pds(frame: FeatureFrame, ensemble: ScorerEnsemble) -> list[float]:
    """PD of the frame under every snapshot in the ensemble, newest first."""
    normalized = frame.normalized
    z = (
        ensemble.intercepts
        + ensemble.linear_terms @ normalized
        + ensemble.fusion_terms @ (normalized * normalized)
    )
    return [_logistic(v) for v in z.tolist()]


def confidence(frame: FeatureFrame, ensemble: ScorerEnsemble) -> float:
    """One minus the population variance of PD across the snapshot ensemble.

    Population variance of values in [0, 1] is at most 1/4, so the result is
    always in [0.75, 1.0]; it is exactly 1.0 iff every snapshot agrees.
    """
    pds = ensemble_pds(frame, ensemble)
    if min(pds) == max(pds):
        return 1.0
    mean = sum(pds) / len(pds)
    variance = sum((p - mean) ** 2 for p in pds) / len(pds)
    if variance > 0.25:
        variance = 0.25
    return 1.0 - variance


def assess(
    frame: FeatureFrame,
    params: ScorerParams,
    ensemble: ScorerEnsemble,
    scored_at_ms: int = 0,
) -> RiskAssessment:
    """Bundle PD, confidence, and attributions; pure function of its inputs."""
    pd = probability_of_default(frame, params)
    return RiskAssessment(
        applicant_id=frame.applicant_id,
        pd=pd,
        confidence=confidence(frame, ensemble),
        attributions=attribute(frame, params, pd=pd),
        params_version=params.version,
        scored_at_ms=scored_at_ms,
    )


def assess_batch(
    frames: list[FeatureFrame],
    params: ScorerParams,
    ensemble: ScorerEnsemble,
    scored_at_ms: list[int],
) -> list[RiskAssessment]:
    """Vectorized `assess` over frames sharing one parameter snapshot.

    Semantically equivalent to calling `assess` per frame; the throughput
    path of the pipelined runtime. Summation order inside the matrix
    products may differ from the scalar path by float rounding.
    """
    norms = np.stack([f.normalized for f in frames])
    weighted = np.stack([f.weighted for f in frames])
    fusions = np.array([f.fusion for f in frames])

    z = weighted @ params.coefficients + params.fusion_gain * fusions + params.intercept
    pds = _logistic_vec(z)
    slope = pds * (1.0 - pds)
    grads = slope[:, None] * (
        params.coefficients * params.feature_weights
        + (2.0 * params.fusion_gain) * params.fusion_coefficients * norms
    )
    order = np.argsort(-np.abs(grads), axis=1, kind="stable")

    squares = norms * norms
    ens_z = (
        ensemble.intercepts
        + norms @ ensemble.linear_terms.T
        + squares @ ensemble.fusion_terms.T
    )
    ens_pds = _logistic_vec(ens_z)
    spread = ens_pds.max(axis=1) - ens_pds.min(axis=1)
    variance = np.square(ens_pds - ens_pds.mean(axis=1)[:, None]).mean(axis=1)
    conf = np.where(spread == 0.0, 1.0, 1.0 - np.minimum(variance, 0.25))

    pds_l = pds.tolist()
    conf_l = conf.tolist()
    grads_l = grads.tolist()
    order_l = order.tolist()
    return [
        RiskAssessment(
            applicant_id=frame.applicant_id,
            pd=pds_l[i],
            confidence=conf_l[i],
            attributions=AttributionVector(tuple(grads_l[i]), tuple(order_l[i])),
            params_version=params.version,
            scored_at_ms=scored_at_ms[i],
        )
        for i, frame in enumerate(frames)
    ]
