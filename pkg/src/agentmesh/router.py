"""Deterministic rule-based agent selection.

Candidates are discovered by action type and ranked by a weighted combination
of load headroom, historical accuracy, and normalized latency. Ties break on
the lexicographically smallest card id, so identical inputs always select the
same agent.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .errors import NoAgentForAction
from .registry import AgentMetrics, Registry

DEFAULT_LATENCY_REF_MS = 100.0


@dataclass(frozen=True)
class RoutingWeights:
    w_load: float = 1.0
    w_accuracy: float = 1.0
    w_latency: float = 1.0
    latency_ref_ms: float = DEFAULT_LATENCY_REF_MS
    # Invocation-cost term, disabled by default; enable via config.
    w_cost: float = 0.0

    def __post_init__(self):
        if min(self.w_load, self.w_accuracy, self.w_latency, self.w_cost) < 0:
            raise ValueError("routing weights must be nonnegative")
        if self.w_load + self.w_accuracy + self.w_latency <= 0:
            raise ValueError("at least one routing weight must be positive")
        if self.latency_ref_ms <= 0:
            raise ValueError("latency_ref_ms must be positive")


def score(metrics: AgentMetrics, weights: RoutingWeights, cost: float = 0.0) -> float:
    """Candidate score; higher is better.

    Latency maps through ref/(ref + latency) so the term stays in (0, 1] and
    decreases monotonically without ever dividing by zero.
    """
    latency_term = weights.latency_ref_ms / (weights.latency_ref_ms + metrics.avg_latency_ms)
    s = (
        weights.w_load * (1.0 - metrics.load)
        + weights.w_accuracy * metrics.historical_accuracy
        + weights.w_latency * latency_term
    )
    if weights.w_cost > 0:
        s -= weights.w_cost * cost
    return s


def route(action_type: str, registry: Registry, weights: RoutingWeights) -> str:
    """Pick the best-scoring card supporting ``action_type``."""
    candidates = registry.discover(action_type)
    if not candidates:
        raise NoAgentForAction(action_type)
    best_id = None
    best_score = float("-inf")
    # discover() is sorted ascending by card_id, so strict improvement gives
    # the lexicographically-smallest winner on ties.
    for card, metrics in candidates:
        s = score(metrics, weights, cost=card.cost)
        if s > best_score:
            best_score = s
            best_id = card.card_id
    return best_id


def adapt_weights(weights: RoutingWeights, episode_latency_ms: float, sla_met: bool,
                  step_size: float) -> RoutingWeights:
    """Shift weight mass toward latency after an SLA violation.

    The (load, accuracy, latency) block is renormalized to its previous L1 sum
    so repeated violations monotonically grow the latency share without
    inflating overall score magnitudes. No-op when the SLA was met.
    """
    if not 0.0 < step_size < 1.0:
        raise ValueError("step_size must be in (0, 1)")
    if sla_met:
        return weights
    total = weights.w_load + weights.w_accuracy + weights.w_latency
    bumped_latency = weights.w_latency * (1.0 + step_size)
    new_total = weights.w_load + weights.w_accuracy + bumped_latency
    scale = total / new_total
    return replace(
        weights,
        w_load=weights.w_load * scale,
        w_accuracy=weights.w_accuracy * scale,
        w_latency=bumped_latency * scale,
    )
