"""Simulated network environment: task generation and stochastic agents.

Everything runs on a simulated clock with seeded randomness so that a
(seed, config) pair reproduces every task and agent response bit-for-bit.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import BadConfig, UnknownCard, UnsupportedAction
from .registry import AgentCard, AgentMetrics, Registry
from .trajectory import ActionInvocation
from .vocab import ANS_CLOSE, ANS_OPEN, NOISE, WRONG, Vocabulary

LOAD_DECAY = 0.9

ACTION_NETWORK_ANALYSIS = "network_analysis"
ACTION_PROTOCOL_QUERY = "protocol_query"


@dataclass(frozen=True)
class TaskSpec:
    task_id: str
    feature_vector: tuple[float, ...]
    required_action: Optional[str]
    ground_truth: str
    sla_deadline_ms: float

    def __post_init__(self):
        if self.sla_deadline_ms <= 0:
            raise ValueError("sla_deadline_ms must be positive")


@dataclass(frozen=True)
class TaskClass:
    """One generator class: a probability, an optional delegation need, and
    the pool of ground-truth answers tasks of this class may carry."""

    name: str
    probability: float
    required_action: Optional[str]
    answer_pool: tuple[str, ...]
    sla_deadline_ms: float


@dataclass(frozen=True)
class GeneratorConfig:
    classes: tuple[TaskClass, ...]

    @property
    def feature_dim(self) -> int:
        return len(self.classes)

    def validate(self) -> "GeneratorConfig":
        if not self.classes:
            raise BadConfig("task generator needs at least one class")
        total = sum(c.probability for c in self.classes)
        if abs(total - 1.0) > 1e-9:
            raise BadConfig(f"class probabilities must sum to 1 (got {total})")
        for c in self.classes:
            if not c.answer_pool:
                raise BadConfig(f"class {c.name!r} has an empty answer pool")
        return self


def sample_task(config: GeneratorConfig, rng: np.random.Generator) -> TaskSpec:
    """Draw one task; features are the one-hot of the drawn class."""
    config.validate()
    probs = np.array([c.probability for c in config.classes])
    idx = int(rng.choice(len(config.classes), p=probs))
    cls = config.classes[idx]
    answer = cls.answer_pool[int(rng.integers(len(cls.answer_pool)))]
    features = tuple(1.0 if i == idx else 0.0 for i in range(len(config.classes)))
    serial = int(rng.integers(1 << 30))
    return TaskSpec(
        task_id=f"{cls.name}-{serial}",
        feature_vector=features,
        required_action=cls.required_action,
        ground_truth=answer,
        sla_deadline_ms=cls.sla_deadline_ms,
    )


@dataclass(frozen=True)
class SimAgentConfig:
    card: AgentCard
    success_prob: dict[str, float]
    latency_base_ms: float
    latency_jitter_ms: float = 0.0
    load_per_call: float = 0.1

    def __post_init__(self):
        # A card may advertise more than the simulator serves (a stale or
        # overclaiming descriptor); invoking such an action raises
        # UnsupportedAction. The reverse, serving an unadvertised action,
        # would be unreachable and is rejected.
        if not set(self.success_prob) <= set(self.card.supported_actions):
            raise ValueError("success_prob keys must be advertised on the card")
        if not self.success_prob:
            raise ValueError("success_prob must cover at least one action")
        for p in self.success_prob.values():
            if not 0.0 <= p <= 1.0:
                raise ValueError("success probabilities must be in [0, 1]")
        if self.latency_base_ms <= 0 or self.latency_jitter_ms < 0:
            raise ValueError("latency parameters out of range")
        if not 0.0 <= self.load_per_call <= 1.0:
            raise ValueError("load_per_call must be in [0, 1]")


@dataclass(frozen=True)
class AgentResponse:
    raw_tokens: tuple[str, ...]
    latency_ms: float
    succeeded: bool


@dataclass
class SimEnv:
    """One episode-scoped environment instance.

    Holds per-agent load levels, a simulated clock, and a private RNG stream.
    Parallel rollouts use independent instances with derived seeds.
    """

    agents: dict[str, SimAgentConfig]
    rng: np.random.Generator
    loads: dict[str, float] = field(default_factory=dict)
    clock_ms: float = 0.0
    current_task: Optional[TaskSpec] = None

    def __post_init__(self):
        for cid in self.agents:
            self.loads.setdefault(cid, 0.0)

    def begin_episode(self, task: TaskSpec) -> float:
        """Bind the episode's task; returns the clock at episode start."""
        self.current_task = task
        return self.clock_ms

    def invoke_agent(self, card_id: str, invocation: ActionInvocation) -> AgentResponse:
        """Simulate one delegation round-trip.

        The informative answer equals the bound task's ground truth only when
        the draw succeeds and the invoked action is the one the task actually
        requires; otherwise a dedicated wrong token is returned so accuracy
        evaluation stays unambiguous. Latency grows with the agent's current
        load; each call decays all loads then adds this agent's per-call load.
        """
        agent = self.agents.get(card_id)
        if agent is None:
            raise UnknownCard(f"no simulated agent for card {card_id!r}")
        if invocation.action_type not in agent.success_prob:
            raise UnsupportedAction(
                f"agent {card_id!r} does not support {invocation.action_type!r}"
            )
        if self.current_task is None:
            raise ValueError("begin_episode must be called before invoke_agent")

        for cid in self.loads:
            self.loads[cid] *= LOAD_DECAY
        load = self.loads[card_id]
        latency = agent.latency_base_ms * (1.0 + load)
        if agent.latency_jitter_ms > 0:
            latency += float(self.rng.uniform(0.0, agent.latency_jitter_ms))
        self.loads[card_id] = min(1.0, load + agent.load_per_call)
        self.clock_ms += latency

        succeeded = bool(self.rng.random() < agent.success_prob[invocation.action_type])
        on_target = succeeded and invocation.action_type == self.current_task.required_action
        answer = self.current_task.ground_truth if on_target else WRONG
        raw = (NOISE, ANS_OPEN, answer, ANS_CLOSE)
        return AgentResponse(raw_tokens=raw, latency_ms=latency, succeeded=succeeded)


@dataclass(frozen=True)
class WorldConfig:
    """Registry contents plus generator config: everything needed to build
    a fresh registry and per-rollout environment instances."""

    agents: tuple[SimAgentConfig, ...]
    generator: GeneratorConfig
    initial_metrics: dict[str, AgentMetrics] = field(default_factory=dict)

    def build_registry(self, ewma_alpha: float = 0.3) -> Registry:
        reg = Registry(ewma_alpha=ewma_alpha)
        for agent in self.agents:
            reg.register_card(agent.card, self.initial_metrics.get(agent.card.card_id))
        return reg

    def build_env(self, seed) -> SimEnv:
        agents = {a.card.card_id: a for a in self.agents}
        return SimEnv(agents=agents, rng=np.random.default_rng(seed))

    @property
    def action_types(self) -> tuple[str, ...]:
        names: list[str] = []
        for c in self.generator.classes:
            if c.required_action and c.required_action not in names:
                names.append(c.required_action)
        return tuple(names)

    def vocabulary(self) -> Vocabulary:
        symbols: list[str] = []
        for c in self.generator.classes:
            symbols.extend(c.answer_pool)
            symbols.append(goal_token(c.name))
        symbols.extend(self.action_types)
        return Vocabulary(symbols)


def goal_token(class_name: str) -> str:
    """Deterministic delegation payload derived from the task class."""
    return f"task_{class_name}"


def class_of_task(config: GeneratorConfig, task: TaskSpec) -> TaskClass:
    idx = int(np.argmax(task.feature_vector))
    return config.classes[idx]


# Default answer pools for the two-agent case study. Pools for the delegated
# classes are larger than one so the answer cannot be inferred from the task
# class alone and delegation is genuinely required.
_NA_ANSWERS = ("congestion", "link_failure", "interference", "misconfig")
_PQ_ANSWERS = ("ts_23_501", "ts_38_331", "tr_38_901", "ts_24_501")


def preset_case_study(
    class_probs: Sequence[float] = (1 / 3, 1 / 3, 1 / 3),
    agent_success: float = 0.9,
    latency_base_ms: float = 50.0,
    latency_jitter_ms: float = 5.0,
    load_per_call: float = 0.2,
) -> WorldConfig:
    """Two specialized agents plus a direct-answer task class."""
    if len(class_probs) != 3:
        raise BadConfig("case-study preset takes exactly three class probabilities")
    na_card = AgentCard("na-agent", "native", frozenset({ACTION_NETWORK_ANALYSIS}),
                        endpoint="sim://na-agent")
    pq_card = AgentCard("pq-agent", "native", frozenset({ACTION_PROTOCOL_QUERY}),
                        endpoint="sim://pq-agent")
    agents = (
        SimAgentConfig(
            card=na_card,
            success_prob={ACTION_NETWORK_ANALYSIS: agent_success},
            latency_base_ms=latency_base_ms,
            latency_jitter_ms=latency_jitter_ms,
            load_per_call=load_per_call,
        ),
        SimAgentConfig(
            card=pq_card,
            success_prob={ACTION_PROTOCOL_QUERY: agent_success},
            latency_base_ms=latency_base_ms * 1.2,
            latency_jitter_ms=latency_jitter_ms,
            load_per_call=load_per_call,
        ),
    )
    generator = GeneratorConfig(classes=(
        TaskClass("direct", class_probs[0], None, ("ack",), sla_deadline_ms=100.0),
        TaskClass(ACTION_NETWORK_ANALYSIS, class_probs[1], ACTION_NETWORK_ANALYSIS,
                  _NA_ANSWERS, sla_deadline_ms=600.0),
        TaskClass(ACTION_PROTOCOL_QUERY, class_probs[2], ACTION_PROTOCOL_QUERY,
                  _PQ_ANSWERS, sla_deadline_ms=600.0),
    )).validate()
    return WorldConfig(agents=agents, generator=generator)
