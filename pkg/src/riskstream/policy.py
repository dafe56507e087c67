"""Decision stage: adaptive approval threshold and the approve/review/reject rule."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .domain import InvalidLoss

__all__ = ["DecisionKind", "ThresholdState", "update_threshold", "decide"]


class DecisionKind(str, Enum):
    APPROVE = "approve"
    REVIEW = "review"
    REJECT = "reject"

    @property
    def severity(self) -> int:
        """Ordering approve < review < reject, for monotonicity checks."""
        return _SEVERITY[self]


_SEVERITY = {DecisionKind.APPROVE: 0, DecisionKind.REVIEW: 1, DecisionKind.REJECT: 2}


@dataclass(frozen=True, slots=True)
class ThresholdState:
    """Current approval cutoff plus the loss memory that drives its updates."""

    tau: float
    last_loss: float | None = None
    updates_applied: int = 0


def update_threshold(
    state: ThresholdState,
    loss_t: float,
    eta: float,
    tau_min: float,
    tau_max: float,
) -> ThresholdState:
    """Move tau by eta times the change in realized loss, clamped to bounds.

    The first observed loss only primes the memory; tau moves from the second
    onward. With a negative eta, rising losses tighten approvals.
    """
    if not 0.0 <= loss_t <= 1.0:
        raise InvalidLoss(loss_t)
    if state.last_loss is None:
        return ThresholdState(state.tau, loss_t, state.updates_applied + 1)
    tau = state.tau + eta * (loss_t - state.last_loss)
    tau = min(max(tau, tau_min), tau_max)
    return ThresholdState(tau, loss_t, state.updates_applied + 1)


def decide(pd: float, state: ThresholdState, review_band: float) -> DecisionKind:
    """Three-way cut: review inside the band around tau, approve below, reject above.

    A zero band reduces to the literal rule: review only at pd == tau exactly.
    """
    if abs(pd - state.tau) <= review_band:
        return DecisionKind.REVIEW
    if pd < state.tau:
        return DecisionKind.APPROVE
    return DecisionKind.REJECT
