import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from psn_deadlock.corpus import builtin
from psn_deadlock.network import steps_to_dest, weight
from psn_deadlock.semantics import (
    EMPTY,
    StepKind,
    StepNotEnabledError,
    TransitionStep,
    apply,
    check_state,
    enabled_pr,
    enabled_steps,
    format_state,
    initial_state,
    label,
    make_state,
    successors,
)

import oracle

SPECS = {name: builtin(name) for name in ("ring4", "ring4-ex3", "ring4-ex4")}
SPECS["grid17"] = builtin("grid17", (2, 4, 6, 10, 12))


def test_initial_sends(ring4):
    steps = enabled_steps(ring4, initial_state(ring4))
    assert len(steps) == 12
    assert all(t.kind is StepKind.SEND for t in steps)
    assert [(t.actor, t.message) for t in steps] == sorted((t.actor, t.message) for t in steps)


def test_process_enabled(ring4):
    s = make_state(ring4, {"c_1": 3})
    steps = enabled_steps(ring4, s)
    sends = [t for t in steps if t.kind is StepKind.SEND]
    assert len(sends) == 9
    assert steps[9:] == [TransitionStep(StepKind.PROCESS, 3, 2, from_channel=0, to_channel=1)]


def test_receive_enabled(ring4):
    s = make_state(ring4, {"c_2": 3})
    assert TransitionStep(StepKind.RECEIVE, 3, 3, from_channel=1) in enabled_steps(ring4, s)


def test_apply_send_process_receive(ring4):
    s0 = initial_state(ring4)
    s1 = apply(ring4, s0, TransitionStep(StepKind.SEND, 3, 1, to_channel=0))
    assert s1 == make_state(ring4, {"c_1": 3})
    s2 = apply(ring4, s1, TransitionStep(StepKind.PROCESS, 3, 2, from_channel=0, to_channel=1))
    assert s2 == make_state(ring4, {"c_2": 3})
    s3 = apply(ring4, s2, TransitionStep(StepKind.RECEIVE, 3, 3, from_channel=1))
    assert s3 == s0


def test_apply_rejects_disabled(ring4):
    with pytest.raises(StepNotEnabledError):
        apply(ring4, initial_state(ring4), TransitionStep(StepKind.RECEIVE, 2, 2, from_channel=0))


def test_malformed_step():
    with pytest.raises(ValueError):
        TransitionStep(StepKind.PROCESS, 3, 2, from_channel=0, to_channel=0)
    with pytest.raises(ValueError):
        TransitionStep(StepKind.SEND, 3, 2, from_channel=0)


def test_enabled_pr(ring4, ex4):
    assert not enabled_pr(ring4, initial_state(ring4))
    assert not enabled_pr(ex4, (3, 4, 1, 2, EMPTY))
    assert enabled_pr(ex4, (3, 4, 1, 2, 1))


def test_label(ring4):
    assert label(ring4, initial_state(ring4)) == {("c_1", None), ("c_2", None), ("c_3", None), ("c_4", None)}
    assert ("c_1", 3) in label(ring4, make_state(ring4, {"c_1": 3}))
    assert format_state(ring4, (3, 4, 1, 2)) == "(c_1=3, c_2=4, c_3=1, c_4=2)"


def test_self_loop_when_stuck(ring4):
    stuck = (3, 4, 1, 2)
    assert enabled_steps(ring4, stuck) == []
    assert successors(ring4, stuck) == [stuck]


def test_check_state(ring4):
    check_state(ring4, (None, 2, None, None))
    with pytest.raises(ValueError):
        check_state(ring4, (None, None))
    with pytest.raises(ValueError):
        check_state(ring4, (7, None, None, None))


@st.composite
def spec_and_state(draw):
    spec = SPECS[draw(st.sampled_from(sorted(SPECS)))]
    contents = st.one_of(st.none(), st.sampled_from(spec.terminals))
    state = tuple(draw(contents) for _ in spec.channels)
    return spec, state


@settings(max_examples=300, deadline=None)
@given(spec_and_state())
def test_steps_match_rules(case):
    spec, state = case
    got = [apply(spec, state, t) for t in enabled_steps(spec, state)]
    assert sorted(got, key=repr) == sorted(oracle.moves(spec, state), key=repr)


@settings(max_examples=300, deadline=None)
@given(spec_and_state())
def test_frame_and_weight(case):
    spec, state = case
    steps = enabled_steps(spec, state)
    assert len(steps) == len(set(steps))
    for t in steps:
        after = apply(spec, state, t)
        changed = {c for c in range(len(state)) if state[c] != after[c]}
        assert changed <= {t.from_channel, t.to_channel} - {None}
        delta = weight(spec, after) - weight(spec, state)
        if t.kind is StepKind.SEND:
            assert delta == steps_to_dest(spec, t.to_channel, t.message) >= 1
        else:
            assert delta == -1
