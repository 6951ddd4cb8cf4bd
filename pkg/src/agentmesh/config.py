"""Run configuration: one JSON file describes a full reproducible run.

All cross-module constraints (reward-weight ordering, group size, class
probabilities) are validated here at load time, each with a message naming
the violated constraint.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Optional

from .errors import BadConfig, InvalidWeights
from .policy import ActionSpace, PolicySpec
from .registry import AgentCard, AgentMetrics, load_cards
from .rewards import RewardWeights
from .router import RoutingWeights
from .simenv import (
    GeneratorConfig,
    SimAgentConfig,
    TaskClass,
    WorldConfig,
    preset_case_study,
)
from .trainer import ExplorationConfig, TrainerConfig
from .vocab import RELAY_ANSWER

PROFILE_CASE_STUDY = "case-study"


@dataclass(frozen=True)
class SftConfig:
    steps: int = 500
    learning_rate: float = 0.1

    def __post_init__(self):
        if self.steps < 1:
            raise BadConfig("sft steps must be >= 1")
        if self.learning_rate <= 0:
            raise BadConfig("sft learning_rate must be > 0")


@dataclass(frozen=True)
class RunConfig:
    seed: int
    world: WorldConfig
    policy_spec: PolicySpec
    router_weights: RoutingWeights
    reward_weights: RewardWeights
    trainer: TrainerConfig
    sft: SftConfig
    out_dir: Path
    max_steps: int
    profile: Optional[str] = None


def _routing_weights(section: dict) -> RoutingWeights:
    try:
        return RoutingWeights(
            w_load=float(section.get("w_load", 1.0)),
            w_accuracy=float(section.get("w_accuracy", 1.0)),
            w_latency=float(section.get("w_latency", 1.0)),
            latency_ref_ms=float(section.get("latency_ref_ms", 100.0)),
            w_cost=float(section.get("w_cost", 0.0)),
        )
    except ValueError as exc:
        raise BadConfig(f"router weights: {exc}") from None


def _reward_weights(section: dict) -> RewardWeights:
    try:
        return RewardWeights(
            lambda_acc=float(section.get("lambda_acc", 1.0)),
            lambda_fmt=float(section.get("lambda_fmt", 0.2)),
            lambda_eff=float(section.get("lambda_eff", 0.2)),
            lambda_qos=float(section.get("lambda_qos", 0.2)),
            lambda_exp=float(section.get("lambda_exp", 0.1)),
        )
    except InvalidWeights:
        raise


def _explicit_world(raw: dict) -> WorldConfig:
    classes = []
    for entry in raw["task_classes"]:
        classes.append(TaskClass(
            name=entry["name"],
            probability=float(entry["probability"]),
            required_action=entry.get("required_action"),
            answer_pool=tuple(entry["answer_pool"]),
            sla_deadline_ms=float(entry.get("sla_deadline_ms", 500.0)),
        ))
    generator = GeneratorConfig(classes=tuple(classes)).validate()

    agents = []
    metrics: dict[str, AgentMetrics] = {}
    card_lookup: dict[str, AgentCard] = {}
    if "registry_cards" in raw:
        for card, m in load_cards(raw["registry_cards"]):
            card_lookup[card.card_id] = card
            metrics[card.card_id] = m
    for entry in raw.get("agents", []):
        cid = entry["card_id"]
        card = card_lookup.get(cid) or AgentCard(
            card_id=cid,
            protocol_tag=entry.get("protocol_tag", "native"),
            supported_actions=frozenset(entry["supported_actions"]),
            endpoint=entry.get("endpoint", ""),
            cost=float(entry.get("cost", 0.0)),
        )
        agents.append(SimAgentConfig(
            card=card,
            success_prob={k: float(v) for k, v in entry["success_prob"].items()},
            latency_base_ms=float(entry.get("latency_base_ms", 50.0)),
            latency_jitter_ms=float(entry.get("latency_jitter_ms", 0.0)),
            load_per_call=float(entry.get("load_per_call", 0.1)),
        ))
    if not agents:
        raise BadConfig("explicit configuration needs at least one agent")
    return WorldConfig(agents=tuple(agents), generator=generator, initial_metrics=metrics)


def _build_world(raw: dict) -> tuple[WorldConfig, Optional[str]]:
    if "task_classes" in raw:
        return _explicit_world(raw), None
    profile = raw.get("profile", PROFILE_CASE_STUDY)
    if profile != PROFILE_CASE_STUDY:
        raise BadConfig(f"unknown profile {profile!r}")
    env = raw.get("env", {})
    return preset_case_study(
        class_probs=tuple(env.get("class_probs", (1 / 3, 1 / 3, 1 / 3))),
        agent_success=float(env.get("agent_success", 0.9)),
        latency_base_ms=float(env.get("latency_base_ms", 50.0)),
        latency_jitter_ms=float(env.get("latency_jitter_ms", 5.0)),
        load_per_call=float(env.get("load_per_call", 0.2)),
    ), profile


def default_policy_spec(world: WorldConfig, max_steps: int,
                        answer_tokens=None) -> PolicySpec:
    """Action space derived from the world: direct-answer tokens (the pools
    of classes answerable without delegation, plus the relay token) and one
    delegation action per action type."""
    if answer_tokens is None:
        tokens: list[str] = []
        for cls in world.generator.classes:
            if cls.required_action is None:
                for t in cls.answer_pool:
                    if t not in tokens:
                        tokens.append(t)
        tokens.append(RELAY_ANSWER)
        answer_tokens = tuple(tokens)
    return PolicySpec(
        feature_dim=world.generator.feature_dim,
        max_steps=max_steps,
        actions=ActionSpace(
            answer_tokens=tuple(answer_tokens),
            action_types=world.action_types,
        ),
    )


def parse_config(raw: dict) -> RunConfig:
    world, profile = _build_world(raw)
    max_steps = int(raw.get("max_steps", 4))
    if max_steps < 1:
        raise BadConfig("max_steps must be >= 1")
    spec = default_policy_spec(
        world, max_steps,
        answer_tokens=raw.get("policy", {}).get("answer_tokens"),
    )
    trainer_raw = raw.get("trainer", {})
    defaults = ExplorationConfig.defaults(spec.num_actions)
    exploration = ExplorationConfig(
        entropy_high_threshold=float(
            trainer_raw.get("entropy_high_threshold", defaults.entropy_high_threshold)),
        entropy_floor=float(trainer_raw.get("entropy_floor", defaults.entropy_floor)),
        branch_factor=int(trainer_raw.get("branch_factor", 2)),
        entropy_bonus=float(trainer_raw.get("entropy_bonus", 0.1)),
    )
    trainer = TrainerConfig(
        group_size=int(trainer_raw.get("group_size", 8)),
        learning_rate=float(trainer_raw.get("learning_rate", 0.05)),
        iterations=int(trainer_raw.get("iterations", 500)),
        max_steps=max_steps,
        exploration=exploration,
        checkpoint_every=int(trainer_raw.get("checkpoint_every", 0)),
    )
    sft_raw = raw.get("sft", {})
    return RunConfig(
        seed=int(raw.get("seed", 0)),
        world=world,
        policy_spec=spec,
        router_weights=_routing_weights(raw.get("router", {})),
        reward_weights=_reward_weights(raw.get("rewards", {})),
        trainer=trainer,
        sft=SftConfig(
            steps=int(sft_raw.get("steps", 500)),
            learning_rate=float(sft_raw.get("learning_rate", 0.1)),
        ),
        out_dir=Path(raw.get("out_dir", "out")),
        max_steps=max_steps,
        profile=profile,
    )


def _coerce(value: str) -> Any:
    try:
        return json.loads(value)
    except json.JSONDecodeError:
        return value


def apply_overrides(raw: dict, overrides: list[str]) -> dict:
    """Apply --set key=value overrides; keys use dotted paths."""
    for item in overrides:
        if "=" not in item:
            raise BadConfig(f"override {item!r} is not of the form key=value")
        key, value = item.split("=", 1)
        node = raw
        parts = key.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise BadConfig(f"override path {key!r} crosses a non-object value")
        node[parts[-1]] = _coerce(value)
    return raw


def load_config(path=None, overrides: list[str] | None = None,
                seed: int | None = None) -> RunConfig:
    raw: dict = {}
    if path is not None:
        try:
            with open(path) as fh:
                raw = json.load(fh)
        except OSError as exc:
            raise BadConfig(f"cannot read config {path}: {exc}") from None
        except json.JSONDecodeError as exc:
            raise BadConfig(f"config {path} is not valid JSON: {exc}") from None
    if overrides:
        raw = apply_overrides(raw, overrides)
    if seed is not None:
        raw["seed"] = seed
    return parse_config(raw)
