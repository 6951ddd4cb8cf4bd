"""Protocol-agnostic agent registry.

Agents are described by unified cards regardless of which interoperability
protocol they were announced on; per-protocol descriptors are absorbed through
small key-renaming adapters. Discovery is by action type, never by identity.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field, replace

from .errors import (
    DuplicateId,
    EmptyActions,
    MissingAttribute,
    UnknownCard,
    UnknownProtocol,
)

DEFAULT_EWMA_ALPHA = 0.3


@dataclass(frozen=True)
class AgentCard:
    """Unified agent record: identity, capabilities, and locator."""

    card_id: str
    protocol_tag: str
    supported_actions: frozenset[str]
    endpoint: str = ""
    cost: float = 0.0

    def __post_init__(self):
        if not self.card_id:
            raise ValueError("card_id must be nonempty")
        object.__setattr__(self, "supported_actions", frozenset(self.supported_actions))
        if self.cost < 0:
            raise ValueError("cost must be >= 0")


@dataclass(frozen=True)
class AgentMetrics:
    """Network-aware metadata tracked per card."""

    load: float = 0.0
    historical_accuracy: float = 1.0
    avg_latency_ms: float = 0.0
    throughput_rps: float = 0.0
    sample_count: int = 0

    def __post_init__(self):
        if not 0.0 <= self.load <= 1.0:
            raise ValueError("load must be in [0, 1]")
        if not 0.0 <= self.historical_accuracy <= 1.0:
            raise ValueError("historical_accuracy must be in [0, 1]")
        if self.avg_latency_ms < 0 or self.throughput_rps < 0 or self.sample_count < 0:
            raise ValueError("latency, throughput and sample_count must be >= 0")


@dataclass(frozen=True)
class RawDescriptor:
    """Protocol-specific announcement prior to adapter normalization."""

    protocol_tag: str
    attributes: dict[str, object] = field(default_factory=dict)


@dataclass(frozen=True)
class _AdapterSpec:
    id_key: str
    actions_key: str
    endpoint_key: str
    cost_key: str


# Each protocol uses its own field names for the same four concepts.
_ADAPTERS: dict[str, _AdapterSpec] = {
    "native": _AdapterSpec("id", "actions", "endpoint", "cost"),
    "a2a": _AdapterSpec("agent_id", "capabilities", "url", "cost"),
    "acp": _AdapterSpec("name", "supported_ops", "address", "cost"),
    "anp": _AdapterSpec("identifier", "action_types", "locator", "cost"),
}


def adapt_descriptor(raw: RawDescriptor) -> AgentCard:
    """Normalize a protocol-specific descriptor into an AgentCard.

    The mapping is a deterministic key-rename; id and actions are required,
    endpoint and cost fall back to defaults when absent.
    """
    spec = _ADAPTERS.get(raw.protocol_tag)
    if spec is None:
        raise UnknownProtocol(f"no adapter for protocol {raw.protocol_tag!r}")
    attrs = raw.attributes
    for required in (spec.id_key, spec.actions_key):
        if required not in attrs:
            raise MissingAttribute(required)
    actions = attrs[spec.actions_key]
    if isinstance(actions, str):
        actions = [a.strip() for a in actions.split(",") if a.strip()]
    return AgentCard(
        card_id=str(attrs[spec.id_key]),
        protocol_tag=raw.protocol_tag,
        supported_actions=frozenset(actions),
        endpoint=str(attrs.get(spec.endpoint_key, "")),
        cost=float(attrs.get(spec.cost_key, 0.0)),
    )


class Registry:
    """Card store with action-type discovery and EWMA metric tracking.

    Reads are safe to run concurrently; mutations are serialized by a lock,
    so a concurrent read observes either the pre- or post-state of a mutation.
    """

    def __init__(self, ewma_alpha: float = DEFAULT_EWMA_ALPHA):
        if not 0.0 < ewma_alpha <= 1.0:
            raise ValueError("ewma_alpha must be in (0, 1]")
        self.ewma_alpha = ewma_alpha
        self._cards: dict[str, AgentCard] = {}
        self._metrics: dict[str, AgentMetrics] = {}
        self._lock = threading.Lock()

    def register_card(self, card: AgentCard, initial_metrics: AgentMetrics | None = None) -> str:
        if not card.supported_actions:
            raise EmptyActions(f"card {card.card_id!r} declares no supported actions")
        with self._lock:
            if card.card_id in self._cards:
                raise DuplicateId(f"card id {card.card_id!r} already registered")
            self._cards[card.card_id] = card
            self._metrics[card.card_id] = initial_metrics or AgentMetrics()
        return card.card_id

    def register_descriptor(self, raw: RawDescriptor,
                            initial_metrics: AgentMetrics | None = None) -> str:
        return self.register_card(adapt_descriptor(raw), initial_metrics)

    def deregister(self, card_id: str) -> AgentCard:
        with self._lock:
            if card_id not in self._cards:
                raise UnknownCard(f"card id {card_id!r} is not registered")
            self._metrics.pop(card_id)
            return self._cards.pop(card_id)

    def discover(self, action_type: str) -> list[tuple[AgentCard, AgentMetrics]]:
        """All cards supporting ``action_type``, ascending by card_id."""
        snapshot = [
            (card, self._metrics[cid])
            for cid, card in self._cards.items()
            if action_type in card.supported_actions
        ]
        snapshot.sort(key=lambda pair: pair[0].card_id)
        return snapshot

    def get(self, card_id: str) -> tuple[AgentCard, AgentMetrics]:
        try:
            return self._cards[card_id], self._metrics[card_id]
        except KeyError:
            raise UnknownCard(f"card id {card_id!r} is not registered") from None

    def card_ids(self) -> list[str]:
        return sorted(self._cards)

    def update_metrics(self, card_id: str, latency_ms: float, success: bool,
                       load_now: float) -> AgentMetrics:
        """Fold one observation into the card's metrics.

        Latency and accuracy follow an EWMA with factor alpha; the first
        observation overwrites the configured prior entirely. Load is a point
        measurement and is replaced, not smoothed.
        """
        with self._lock:
            if card_id not in self._cards:
                raise UnknownCard(f"card id {card_id!r} is not registered")
            prev = self._metrics[card_id]
            a = 1.0 if prev.sample_count == 0 else self.ewma_alpha
            observed_acc = 1.0 if success else 0.0
            updated = replace(
                prev,
                load=min(max(load_now, 0.0), 1.0),
                historical_accuracy=(1 - a) * prev.historical_accuracy + a * observed_acc,
                avg_latency_ms=(1 - a) * prev.avg_latency_ms + a * latency_ms,
                sample_count=prev.sample_count + 1,
            )
            self._metrics[card_id] = updated
            return updated


def load_cards(path) -> list[tuple[AgentCard, AgentMetrics]]:
    """Read the agent-card file format: a JSON array of card objects."""
    with open(path) as fh:
        entries = json.load(fh)
    out = []
    for entry in entries:
        card = AgentCard(
            card_id=entry["card_id"],
            protocol_tag=entry.get("protocol_tag", "native"),
            supported_actions=frozenset(entry["supported_actions"]),
            endpoint=entry.get("endpoint", ""),
            cost=float(entry.get("cost", 0.0)),
        )
        m = entry.get("metrics", {})
        metrics = AgentMetrics(
            load=float(m.get("load", 0.0)),
            historical_accuracy=float(m.get("historical_accuracy", 1.0)),
            avg_latency_ms=float(m.get("avg_latency_ms", 0.0)),
            throughput_rps=float(m.get("throughput_rps", 0.0)),
        )
        out.append((card, metrics))
    return out


def save_cards(path, cards: list[tuple[AgentCard, AgentMetrics]]) -> None:
    entries = []
    for card, metrics in cards:
        entries.append({
            "card_id": card.card_id,
            "protocol_tag": card.protocol_tag,
            "supported_actions": sorted(card.supported_actions),
            "endpoint": card.endpoint,
            "cost": card.cost,
            "metrics": {
                "load": metrics.load,
                "historical_accuracy": metrics.historical_accuracy,
                "avg_latency_ms": metrics.avg_latency_ms,
                "throughput_rps": metrics.throughput_rps,
            },
        })
    with open(path, "w") as fh:
        json.dump(entries, fh, indent=2)
