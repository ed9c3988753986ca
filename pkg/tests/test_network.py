import pytest

from psn_deadlock.corpus import GRID17_EDGES, builtin, grid17
from psn_deadlock.network import (
    AmbiguousRoutingError,
    Channel,
    IncorrectNetworkError,
    InvalidNetworkError,
    NetworkSpec,
    UndefinedRouteError,
    check_correct,
    ensure_valid,
    next_channel,
    next_hop,
    routable_sets,
    shortest_path_routing,
    steps_to_dest,
    validate,
    weight,
)
from psn_deadlock.semantics import make_state

import oracle


def test_ring4_is_valid(ring4):
    assert validate(ring4).valid
    assert len(ring4.channels) == 4
    for n in ring4.nodes:
        for m in ring4.terminals:
            if n != m:
                assert ring4.rout(n, m) == n - 1


def test_source_mismatch_reported(ring4):
    routing = dict(ring4.routing)
    routing[(1, 3)] = 1  # c_2 leaves node 2
    bad = NetworkSpec("bad", ring4.nodes, ring4.terminals, ring4.channels, routing)
    assert "source mismatch" in validate(bad).kinds()
    with pytest.raises(InvalidNetworkError):
        ensure_valid(bad)


def _cyclic():
    channels = [Channel("a", 1, 3), Channel("b", 3, 1), Channel("c", 3, 2), Channel("d", 2, 3)]
    routing = {(1, 2): 0, (3, 2): 1, (2, 1): 3, (3, 1): 1}
    return NetworkSpec("cyclic", (1, 2, 3), (1, 2), channels, routing)


def test_routing_cycle_is_incorrect():
    spec = _cyclic()
    report = validate(spec)
    assert report.kinds() == {"incorrect routing"}
    result = check_correct(spec)
    assert not result.correct
    assert (1, 2) in result.cycles and (3, 2) in result.cycles


@pytest.mark.parametrize(
    "mutate, kind",
    [
        (lambda s: (s.nodes, (1,), s.channels, s.routing), "too few terminals"),
        (lambda s: (s.nodes, s.terminals, s.channels + (Channel("x", 1, 9),), s.routing), "unknown node"),
        (lambda s: (s.nodes, s.terminals, s.channels + (Channel("c_1", 1, 3),), s.routing), "duplicate channel"),
        (lambda s: (s.nodes, s.terminals, s.channels + (Channel("x", 1, 2),), s.routing), "parallel channel"),
        (lambda s: (s.nodes, s.terminals, s.channels, {**s.routing, (1, 3): 7}), "unknown channel"),
        (lambda s: (s.nodes, s.terminals, s.channels, {**s.routing, (1, 1): 0}), "extra route"),
        (lambda s: (s.nodes, s.terminals, s.channels, {k: v for k, v in s.routing.items() if k != (2, 4)}), "missing route"),
    ],
)
def test_structural_violations(ring4, mutate, kind):
    spec = NetworkSpec("mutant", *mutate(ring4))
    assert kind in validate(spec).kinds()


def test_check_correct_hops(ring4):
    hops = check_correct(ring4).hops
    assert hops[(1, 3)] == 2
    assert hops[(3, 3)] == 0
    assert hops[(2, 1)] == 3


def test_next_hop_and_channel(ring4):
    assert next_hop(ring4, 1, 3) == 2
    assert next_hop(ring4, 1, 2) == 2
    assert next_channel(ring4, 0, 3) == 1
    assert next_channel(ring4, 0, 4) == 1
    with pytest.raises(UndefinedRouteError):
        next_channel(ring4, 0, 2)
    with pytest.raises(UndefinedRouteError):
        ring4.rout(2, 2)


def test_grid17_routes():
    spec = builtin("grid17", (1, 5, 8, 11, 12, 13, 15))
    assert len(spec.channels) == 27 and len(spec.nodes) == 17
    assert next_hop(spec, 15, 11) == 17
    c = spec.channel_named("(15->17)")
    assert spec.channels[next_channel(spec, c, 11)].name == "(17->11)"
    assert check_correct(spec).correct


def test_steps_to_dest_and_weight(ring4):
    assert steps_to_dest(ring4, 0, None) == 0
    assert steps_to_dest(ring4, 0, 2) == 1
    assert steps_to_dest(ring4, 0, 3) == 2
    assert weight(ring4, make_state(ring4, {})) == 0
    assert weight(ring4, make_state(ring4, {"c_1": 3, "c_2": 4, "c_3": 1, "c_4": 2})) == 8
    assert weight(ring4, make_state(ring4, {"c_1": 2})) == 1


def test_steps_to_dest_guard():
    spec = _cyclic()
    with pytest.raises(IncorrectNetworkError):
        steps_to_dest(spec, 0, 2)


@pytest.mark.parametrize("name", ["ring4", "ring4-ex3", "ring4-ex4"])
def test_hop_count_properties(name):
    spec = builtin(name)
    for c, ch in enumerate(spec.channels):
        for m in spec.terminals:
            n = steps_to_dest(spec, c, m)
            assert n == oracle.hops(spec, c, m)
            assert 1 <= n <= len(spec.channels)
            # walking nextC l times lands on a channel into m exactly at l = n - 1
            cur, node = c, ch.target
            for k in range(n - 1):
                assert node != m
                node = next_hop(spec, node, m)
                cur = next_channel(spec, cur, m)
                assert spec.channels[cur].target == node
            assert node == m


def test_routable_sets(ring4, ex3, ex4):
    assert routable_sets(ring4)[0] == {2, 3, 4}
    assert routable_sets(ex3)[4] == {2}
    assert routable_sets(ex4)[4] == {1}


def test_routable_sets_are_sound(ring_graphs):
    for graph in ring_graphs.values():
        spec = graph.spec
        routable = routable_sets(spec)
        for i in range(len(graph)):
            for c, m in enumerate(graph.state(i)):
                assert m is None or m in routable[c]


def test_shortest_path_routing_unique_on_grid17():
    spec = grid17(range(1, 18))
    assert len(spec.routing) == 17 * 16
    assert validate(spec).valid


def test_shortest_path_ambiguity_detected():
    # a diamond: two equal-length paths from 1 to 4
    channels = [Channel(f"e{i}", a, b) for i, (a, b) in enumerate([(1, 2), (1, 3), (2, 4), (3, 4), (4, 1)])]
    with pytest.raises(AmbiguousRoutingError):
        shortest_path_routing((1, 2, 3, 4), (1, 4), channels)


def test_grid17_edge_list():
    assert len(GRID17_EDGES) == 27
    assert len(set(GRID17_EDGES)) == 27


def test_with_terminals(ring4):
    smaller = ring4.with_terminals((1, 3))
    assert smaller.terminals == (1, 3)
    assert validate(smaller).valid
    assert all(m in (1, 3) for _, m in smaller.routing)
