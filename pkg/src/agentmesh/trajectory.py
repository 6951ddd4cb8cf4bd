"""Episode token streams with source attribution and loss masking.

A trajectory is an ordered list of segments, each attributed to the reasoning
core, an external agent, or the system. Only core segments contribute to the
loss mask; agent responses are filtered down to the span between the answer
delimiters before insertion, so delegated content can never leak into policy
updates.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .errors import EpisodeClosed, MalformedAgentResponse, NotAnAction
from .vocab import ACTION_CLOSE, ACTION_OPEN, ANS_CLOSE, ANS_OPEN, CONTROL_TAGS

SOURCE_CORE = "core"
SOURCE_AGENT = "agent"
SOURCE_SYSTEM = "system"

TERMINAL_OPEN = "open"
TERMINAL_ANSWERED = "answered"
TERMINAL_TRUNCATED = "truncated"
TERMINAL_FAILED = "failed"

INDICATOR_DISORDER = "indicator_disorder"
NO_AGENT_FOR_ACTION = "no_agent_for_action"
MALFORMED_AGENT_RESPONSE = "malformed_agent_response"


@dataclass(frozen=True)
class Segment:
    tokens: tuple[str, ...]
    source: str
    loss_included: bool
    card_id: Optional[str] = None

    def __post_init__(self):
        if self.source == SOURCE_CORE and not self.loss_included:
            raise ValueError("core segments must be loss-included")
        if self.source in (SOURCE_AGENT, SOURCE_SYSTEM) and self.loss_included:
            raise ValueError("agent/system segments must be loss-excluded")
        if self.source == SOURCE_AGENT and self.card_id is None:
            raise ValueError("agent segments must carry a card_id")


def core_segment(tokens) -> Segment:
    return Segment(tuple(tokens), SOURCE_CORE, loss_included=True)


def agent_segment(card_id: str, tokens) -> Segment:
    return Segment(tuple(tokens), SOURCE_AGENT, loss_included=False, card_id=card_id)


def system_segment(tokens) -> Segment:
    return Segment(tuple(tokens), SOURCE_SYSTEM, loss_included=False)


@dataclass(frozen=True)
class Terminal:
    kind: str
    answer: Optional[str] = None
    reason: Optional[str] = None

    @staticmethod
    def open() -> "Terminal":
        return Terminal(TERMINAL_OPEN)

    @staticmethod
    def answered(token: str) -> "Terminal":
        return Terminal(TERMINAL_ANSWERED, answer=token)

    @staticmethod
    def truncated() -> "Terminal":
        return Terminal(TERMINAL_TRUNCATED)

    @staticmethod
    def failed(reason: str) -> "Terminal":
        return Terminal(TERMINAL_FAILED, reason=reason)


@dataclass(frozen=True)
class FailureReport:
    kind: str
    position: Optional[tuple[int, int]] = None  # (segment index, token index)


@dataclass(frozen=True)
class ActionInvocation:
    action_type: str
    goal_tokens: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.action_type:
            raise ValueError("action_type must be nonempty")


@dataclass
class Trajectory:
    segments: list[Segment] = field(default_factory=list)
    terminal: Terminal = field(default_factory=Terminal.open)

    @property
    def is_open(self) -> bool:
        return self.terminal.kind == TERMINAL_OPEN

    def _require_open(self):
        if not self.is_open:
            raise EpisodeClosed(f"trajectory already terminal: {self.terminal.kind}")

    def append_core(self, tokens) -> "Trajectory":
        """Append a loss-included core segment; empty appends are dropped."""
        self._require_open()
        tokens = tuple(tokens)
        if tokens:
            self.segments.append(core_segment(tokens))
        return self

    def append_system(self, tokens) -> "Trajectory":
        self._require_open()
        tokens = tuple(tokens)
        if tokens:
            self.segments.append(system_segment(tokens))
        return self

    def insert_agent_response(self, card_id: str, raw_tokens) -> "Trajectory":
        """Keep only the informative span of an agent response.

        The raw response must contain exactly one non-empty span delimited by
        the answer tags; everything outside the delimiters is dropped and the
        delimiters themselves are consumed.
        """
        self._require_open()
        span = extract_answer_span(raw_tokens)
        self.segments.append(agent_segment(card_id, span))
        return self

    def close(self, terminal: Terminal) -> "Trajectory":
        self._require_open()
        self.terminal = terminal
        return self

    def loss_mask(self) -> list[bool]:
        """One flag per token in segment order; true only for core tokens."""
        mask: list[bool] = []
        for seg in self.segments:
            mask.extend([seg.loss_included] * len(seg.tokens))
        return mask

    def agent_segment_count(self) -> int:
        return sum(1 for s in self.segments if s.source == SOURCE_AGENT)


def extract_answer_span(raw_tokens) -> tuple[str, ...]:
    """The tokens strictly between the unique answer-delimiter pair."""
    raw = list(raw_tokens)
    opens = [i for i, t in enumerate(raw) if t == ANS_OPEN]
    closes = [i for i, t in enumerate(raw) if t == ANS_CLOSE]
    if len(opens) != 1 or len(closes) != 1:
        raise MalformedAgentResponse(
            f"expected exactly one answer span, got {len(opens)} opens / {len(closes)} closes"
        )
    if closes[0] < opens[0]:
        raise MalformedAgentResponse("answer delimiters out of order")
    span = tuple(raw[opens[0] + 1:closes[0]])
    if not span:
        raise MalformedAgentResponse("empty answer span")
    if any(t in CONTROL_TAGS for t in span):
        raise MalformedAgentResponse("control tag inside answer span")
    return span


WELL_FORMED = "well_formed"


def validate(traj: Trajectory):
    """Structural check for control-tag discipline.

    Within core segments, every action-open tag must be followed in the same
    segment by exactly one close tag with a nonempty action type in between;
    tags must not nest and no control tag may appear outside that pattern.
    Non-core segments must contain no control tags at all (insertion already
    consumes the answer delimiters). Returns WELL_FORMED or a FailureReport.
    """
    for si, seg in enumerate(traj.segments):
        if seg.source != SOURCE_CORE:
            for ti, tok in enumerate(seg.tokens):
                if tok in CONTROL_TAGS:
                    return FailureReport(INDICATOR_DISORDER, (si, ti))
            continue
        open_at = None
        for ti, tok in enumerate(seg.tokens):
            if tok in (ANS_OPEN, ANS_CLOSE):
                return FailureReport(INDICATOR_DISORDER, (si, ti))
            if tok == ACTION_OPEN:
                if open_at is not None:
                    return FailureReport(INDICATOR_DISORDER, (si, ti))
                open_at = ti
            elif tok == ACTION_CLOSE:
                if open_at is None or ti == open_at + 1:
                    return FailureReport(INDICATOR_DISORDER, (si, ti))
                open_at = None
        if open_at is not None:
            return FailureReport(INDICATOR_DISORDER, (si, open_at))
    return WELL_FORMED


def parse_action(segment: Segment) -> ActionInvocation:
    """Interpret a core segment that is exactly one action span."""
    toks = segment.tokens
    if (
        len(toks) < 3
        or toks[0] != ACTION_OPEN
        or toks[-1] != ACTION_CLOSE
        or any(t in CONTROL_TAGS for t in toks[1:-1])
    ):
        raise NotAnAction(f"segment is not a single action span: {list(toks)!r}")
    return ActionInvocation(action_type=toks[1], goal_tokens=tuple(toks[2:-1]))


def action_spans(traj: Trajectory) -> list[ActionInvocation]:
    """Parse every core segment that is an action span, in order."""
    out = []
    for seg in traj.segments:
        if seg.source != SOURCE_CORE:
            continue
        try:
            out.append(parse_action(seg))
        except NotAnAction:
            continue
    return out


def to_log_record(traj: Trajectory, episode_id: str,
                  reward_vector=None, scalar_reward=None) -> dict:
    """JSONL trajectory-log record for one episode."""
    segs = []
    for seg in traj.segments:
        entry = {
            "source": seg.source,
            "tokens": list(seg.tokens),
            "loss_included": seg.loss_included,
        }
        if seg.card_id is not None:
            entry["card_id"] = seg.card_id
        segs.append(entry)
    terminal: dict = {"kind": traj.terminal.kind}
    if traj.terminal.answer is not None:
        terminal["answer"] = traj.terminal.answer
    if traj.terminal.reason is not None:
        terminal["reason"] = traj.terminal.reason
    record = {"episode_id": episode_id, "segments": segs, "terminal": terminal}
    if reward_vector is not None:
        record["reward_vector"] = reward_vector
    if scalar_reward is not None:
        record["scalar_reward"] = scalar_reward
    return record
