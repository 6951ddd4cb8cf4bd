"""Episode loop: interpret the task, decide, route, invoke, integrate.

Each step the policy either answers directly or delegates to an action type;
delegations are routed to a concrete agent, the agent's filtered response is
inserted into the trajectory, and a system marker feeds the success flag back
to the next observation. Failures never raise out of the loop; they terminate
the episode with a failure report in the outcome.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import MalformedAgentResponse, NoAgentForAction
from .policy import (
    KIND_ANSWER,
    OUTCOME_AGENT_FAILURE,
    OUTCOME_AGENT_SUCCESS,
    OUTCOME_NONE,
    Decision,
    Observation,
    PolicySpec,
    SftSample,
    action_distribution,
    entropy as policy_entropy,
)
from .registry import Registry
from .router import RoutingWeights, route
from .simenv import AgentResponse, GeneratorConfig, SimEnv, TaskSpec, class_of_task, goal_token, sample_task
from .trajectory import (
    MALFORMED_AGENT_RESPONSE,
    NO_AGENT_FOR_ACTION,
    ActionInvocation,
    FailureReport,
    Terminal,
    Trajectory,
)
from .vocab import ACTION_CLOSE, ACTION_OPEN, RELAY_ANSWER, SYS_AGENT_FAILURE, SYS_AGENT_SUCCESS, WRONG


@dataclass(frozen=True)
class EpisodeOutcome:
    final_answer: Optional[str]
    total_latency_ms: float
    invocation_count: int
    sla_met: bool
    failure: Optional[FailureReport] = None


@dataclass(frozen=True)
class StepRecord:
    obs: Observation
    action_index: int
    log_prob: float
    entropy: float


def interpret(task: TaskSpec) -> Observation:
    """Initial observation: task features, step 0, no prior agent outcome."""
    return Observation(features=task.feature_vector, step_index=0, last_outcome=OUTCOME_NONE)


def decide(obs: Observation, theta: np.ndarray, spec: PolicySpec,
           rng: np.random.Generator, greedy: bool = False) -> tuple[Decision, int, float]:
    """Sample one decision from the policy's action distribution.

    Greedy mode takes the argmax instead (first index on exact ties).
    """
    probs = action_distribution(theta, spec, obs)
    if greedy:
        index = int(np.argmax(probs))
    else:
        index = int(rng.choice(spec.num_actions, p=probs))
    return spec.actions.decision_of(index), index, float(np.log(probs[index]))


def integrate(traj: Trajectory, response: AgentResponse, card_id: str) -> Trajectory:
    """Insert the filtered agent answer plus a system success marker.

    Atomic: a malformed response leaves the trajectory unchanged.
    """
    traj.insert_agent_response(card_id, response.raw_tokens)
    flag = SYS_AGENT_SUCCESS if response.succeeded else SYS_AGENT_FAILURE
    traj.append_system([flag])
    return traj


def execute_episode(
    task: TaskSpec,
    theta: np.ndarray,
    spec: PolicySpec,
    registry: Registry,
    weights: RoutingWeights,
    env: SimEnv,
    rng: np.random.Generator,
    max_steps: int = 4,
    generator: GeneratorConfig | None = None,
    update_registry_metrics: bool = True,
    greedy: bool = False,
) -> tuple[Trajectory, EpisodeOutcome, list[StepRecord]]:
    if max_steps < 1:
        raise ValueError("max_steps must be >= 1")
    traj = Trajectory()
    start_clock = env.begin_episode(task)
    records: list[StepRecord] = []
    relay_source: Optional[str] = None  # informative token of last successful response
    failure: Optional[FailureReport] = None
    final_answer: Optional[str] = None
    invocations = 0
    last_outcome = OUTCOME_NONE

    payload = goal_token(class_of_task(generator, task).name) if generator else None

    for step in range(max_steps):
        obs = Observation(task.feature_vector, step_index=step, last_outcome=last_outcome)
        decision, index, log_prob = decide(obs, theta, spec, rng, greedy=greedy)
        records.append(StepRecord(
            obs=obs,
            action_index=index,
            log_prob=log_prob,
            entropy=policy_entropy(theta, spec, obs),
        ))

        if decision.kind == KIND_ANSWER:
            token = decision.token
            if token == RELAY_ANSWER:
                token = relay_source if relay_source is not None else WRONG
            traj.append_core([token])
            traj.close(Terminal.answered(token))
            final_answer = token
            break

        goal = [payload] if payload else []
        traj.append_core([ACTION_OPEN, decision.action_type, *goal, ACTION_CLOSE])
        try:
            card_id = route(decision.action_type, registry, weights)
        except NoAgentForAction:
            failure = FailureReport(NO_AGENT_FOR_ACTION)
            traj.close(Terminal.failed(NO_AGENT_FOR_ACTION))
            break

        invocation = ActionInvocation(decision.action_type, tuple(goal))
        response = env.invoke_agent(card_id, invocation)
        invocations += 1
        try:
            integrate(traj, response, card_id)
        except MalformedAgentResponse:
            failure = FailureReport(MALFORMED_AGENT_RESPONSE)
            traj.close(Terminal.failed(MALFORMED_AGENT_RESPONSE))
            break
        if update_registry_metrics:
            registry.update_metrics(card_id, response.latency_ms, response.succeeded,
                                    load_now=env.loads[card_id])
        if response.succeeded:
            # the informative span is a single answer token by construction
            relay_source = traj.segments[-2].tokens[-1]
            last_outcome = OUTCOME_AGENT_SUCCESS
        else:
            last_outcome = OUTCOME_AGENT_FAILURE
    else:
        traj.close(Terminal.truncated())

    total_latency = env.clock_ms - start_clock
    outcome = EpisodeOutcome(
        final_answer=final_answer,
        total_latency_ms=total_latency,
        invocation_count=invocations,
        sla_met=total_latency <= task.sla_deadline_ms,
        failure=failure,
    )
    return traj, outcome, records


def delegation_signature(traj: Trajectory) -> tuple[str, ...]:
    """Ordered tuple of invoked action types (novelty-ledger key)."""
    from .trajectory import action_spans

    return tuple(inv.action_type for inv in action_spans(traj))


def make_warmup_dataset(generator: GeneratorConfig, spec: PolicySpec, n: int,
                        rng: np.random.Generator) -> list[SftSample]:
    """Demonstrations for supervised warm-up.

    Two sample kinds, both at step 0: direct tasks demonstrate answering with
    the ground truth, delegation tasks demonstrate invoking the required
    action type. Later-step behavior (retry, report) is left to RL.
    """
    samples = []
    for _ in range(n):
        task = sample_task(generator, rng)
        obs = interpret(task)
        if task.required_action is None:
            demo = Decision.answer(task.ground_truth)
        else:
            demo = Decision.delegate(task.required_action)
        samples.append(SftSample(obs=obs, demo_action_index=spec.actions.index_of(demo)))
    return samples
