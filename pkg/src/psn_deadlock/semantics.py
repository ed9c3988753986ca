"""Operational semantics: send, process and receive steps over channel contents.

A state is a plain tuple with one entry per channel; an entry is the
destination terminal of the message in that channel, or ``None`` when the
channel is empty.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .network import NetworkSpec

EMPTY = None


class StepNotEnabledError(ValueError):
    pass


class StepKind(str, enum.Enum):
    SEND = "send"
    PROCESS = "process"
    RECEIVE = "receive"


@dataclass(frozen=True)
class TransitionStep:
    kind: StepKind
    message: int
    actor: int
    from_channel: int | None = None
    to_channel: int | None = None

    def __post_init__(self):
        has_from = self.from_channel is not None
        has_to = self.to_channel is not None
        ok = {
            StepKind.SEND: not has_from and has_to,
            StepKind.RECEIVE: has_from and not has_to,
            StepKind.PROCESS: has_from and has_to and self.from_channel != self.to_channel,
        }[self.kind]
        if not ok:
            raise ValueError(f"malformed {self.kind.value} step {self!r}")

    def describe(self, spec: NetworkSpec) -> str:
        name = lambda c: spec.channels[c].name  # noqa: E731
        if self.kind is StepKind.SEND:
            return f"send {self.actor}->{self.message} into {name(self.to_channel)}"
        if self.kind is StepKind.PROCESS:
            return f"process {self.message} at {self.actor}: {name(self.from_channel)} -> {name(self.to_channel)}"
        return f"receive {self.message} from {name(self.from_channel)}"

    def to_dict(self, spec: NetworkSpec) -> dict:
        return {
            "kind": self.kind.value,
            "actor": self.actor,
            "message": self.message,
            "from": None if self.from_channel is None else spec.channels[self.from_channel].name,
            "to": None if self.to_channel is None else spec.channels[self.to_channel].name,
        }


def initial_state(spec: NetworkSpec) -> tuple:
    return (EMPTY,) * spec.n_channels


def make_state(spec: NetworkSpec, contents: dict) -> tuple:
    """Build a state from ``{channel name or index: message}``; other channels empty."""
    state = [EMPTY] * spec.n_channels
    for key, m in contents.items():
        c = key if isinstance(key, int) else spec.channel_named(key)
        state[c] = m
    return tuple(state)


def check_state(spec: NetworkSpec, state) -> None:
    if len(state) != spec.n_channels:
        raise ValueError(f"state has {len(state)} entries, network has {spec.n_channels} channels")
    for m in state:
        if m is not EMPTY and m not in spec.terminals:
            raise ValueError(f"channel content {m} is not a terminal")


def send_steps(spec: NetworkSpec, state) -> list:
    steps = []
    for m in spec.terminals:
        for m2 in spec.terminals:
            if m != m2:
                c = spec.rout(m, m2)
                if state[c] is EMPTY:
                    steps.append(TransitionStep(StepKind.SEND, m2, m, to_channel=c))
    return steps


def pr_steps(spec: NetworkSpec, state) -> list:
    processes, receives = [], []
    for c, m in enumerate(state):
        if m is EMPTY:
            continue
        target = spec.channels[c].target
        if target == m:
            receives.append(TransitionStep(StepKind.RECEIVE, m, m, from_channel=c))
        else:
            c2 = spec.rout(target, m)
            if state[c2] is EMPTY:
                processes.append(TransitionStep(StepKind.PROCESS, m, target, from_channel=c, to_channel=c2))
    return processes + receives


def enabled_steps(spec: NetworkSpec, state) -> list:
    """All enabled steps in canonical order: sends, then processes, then receives."""
    return send_steps(spec, state) + pr_steps(spec, state)


def enabled_pr(spec: NetworkSpec, state) -> bool:
    return bool(pr_steps(spec, state))


def apply(spec: NetworkSpec, state, step: TransitionStep) -> tuple:
    if step not in enabled_steps(spec, state):
        raise StepNotEnabledError(f"{step.describe(spec)} is not enabled")
    out = list(state)
    if step.from_channel is not None:
        out[step.from_channel] = EMPTY
    if step.to_channel is not None:
        out[step.to_channel] = step.message
    return tuple(out)


def successors(spec: NetworkSpec, state) -> list:
    """Successor states of the Kripke structure, including the totalization self-loop."""
    steps = enabled_steps(spec, state)
    if not steps:
        return [tuple(state)]
    return [apply(spec, state, t) for t in steps]


def label(spec: NetworkSpec, state) -> frozenset:
    return frozenset((ch.name, m) for ch, m in zip(spec.channels, state))


def format_state(spec: NetworkSpec, state) -> str:
    parts = []
    for ch, m in zip(spec.channels, state):
        parts.append(f"{ch.name}={'⊥' if m is EMPTY else m}")
    return "(" + ", ".join(parts) + ")"
