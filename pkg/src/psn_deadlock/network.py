"""Static description of a packet switching network and its routing analytics."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping


class NetworkError(ValueError):
    """Base class for malformed or unusable network descriptions."""


class InvalidNetworkError(NetworkError):
    def __init__(self, violations):
        self.violations = list(violations)
        lines = "; ".join(str(v) for v in self.violations)
        super().__init__(f"invalid network: {lines}")


class IncorrectNetworkError(NetworkError):
    """Routing sends some message around a cycle."""


class UndefinedRouteError(NetworkError):
    """Lookup of a routing entry outside the domain of the routing function."""


class AmbiguousRoutingError(NetworkError):
    """Shortest-path routing requested but some pair has two shortest paths."""


@dataclass(frozen=True)
class Channel:
    name: str
    source: int
    target: int

    def __str__(self):
        return self.name


def _as_tuple(items):
    return tuple(sorted(set(int(x) for x in items)))


@dataclass(frozen=True)
class NetworkSpec:
    """Nodes, terminals, channels and a deterministic routing table.

    ``routing`` maps ``(node, destination)`` to a channel index into
    ``channels``. Construction does not validate; see :func:`validate`.
    """

    name: str
    nodes: tuple
    terminals: tuple
    channels: tuple
    routing: Mapping = field(hash=False)

    def __post_init__(self):
        object.__setattr__(self, "nodes", _as_tuple(self.nodes))
        object.__setattr__(self, "terminals", _as_tuple(self.terminals))
        object.__setattr__(self, "channels", tuple(self.channels))
        object.__setattr__(
            self, "routing", {(int(n), int(m)): int(c) for (n, m), c in dict(self.routing).items()}
        )

    @property
    def n_channels(self) -> int:
        return len(self.channels)

    @cached_property
    def channel_index(self) -> dict:
        return {ch.name: i for i, ch in enumerate(self.channels)}

    def channel_named(self, name: str) -> int:
        try:
            return self.channel_index[name]
        except KeyError:
            raise NetworkError(f"unknown channel {name!r}") from None

    def rout(self, n: int, m: int) -> int:
        if n == m or m not in self.terminals:
            raise UndefinedRouteError(f"rout({n}, {m}) is undefined")
        try:
            return self.routing[n, m]
        except KeyError:
            raise UndefinedRouteError(f"no routing entry for ({n}, {m})") from None

    def with_terminals(self, terminals: Iterable[int], routing: Mapping | None = None) -> "NetworkSpec":
        terminals = _as_tuple(terminals)
        if routing is None:
            routing = {(n, m): c for (n, m), c in self.routing.items() if m in terminals}
        return NetworkSpec(self.name, self.nodes, terminals, self.channels, routing)


@dataclass(frozen=True)
class Violation:
    kind: str
    detail: str

    def __str__(self):
        return f"{self.kind}: {self.detail}"


@dataclass
class ValidationReport:
    violations: list

    @property
    def valid(self) -> bool:
        return not self.violations

    def kinds(self) -> set:
        return {v.kind for v in self.violations}

    def raise_if_invalid(self):
        if self.violations:
            raise InvalidNetworkError(self.violations)


@dataclass
class CorrectnessResult:
    """Outcome of unrolling ``next_m`` from every node toward every terminal.

    ``hops[(n, m)]`` is the least k with next_m^k(n) = m. ``cycles`` holds the
    nodes visited for pairs that never arrive, ``undefined`` the pairs whose
    unrolling hit a missing routing entry.
    """

    hops: dict
    cycles: dict
    undefined: dict

    @property
    def correct(self) -> bool:
        return not self.cycles and not self.undefined


def _structural_violations(spec: NetworkSpec) -> list:
    out = []
    nodes = set(spec.nodes)
    if len(spec.terminals) < 2:
        out.append(Violation("too few terminals", f"need at least 2 terminals, got {len(spec.terminals)}"))
    for m in spec.terminals:
        if m not in nodes:
            out.append(Violation("unknown node", f"terminal {m} is not a declared node"))
    for n in spec.nodes:
        if n <= 0:
            out.append(Violation("bad node id", f"node id {n} is not a positive integer"))
    seen_names, seen_pairs = set(), set()
    for i, ch in enumerate(spec.channels):
        if ch.name in seen_names:
            out.append(Violation("duplicate channel", f"channel name {ch.name!r} used twice"))
        seen_names.add(ch.name)
        if (ch.source, ch.target) in seen_pairs:
            out.append(Violation("parallel channel", f"second channel from {ch.source} to {ch.target}"))
        seen_pairs.add((ch.source, ch.target))
        for end in (ch.source, ch.target):
            if end not in nodes:
                out.append(Violation("unknown node", f"channel {ch.name} references undeclared node {end}"))
    for (n, m), c in sorted(spec.routing.items()):
        if not 0 <= c < len(spec.channels):
            out.append(Violation("unknown channel", f"rout({n}, {m}) = #{c} is out of range"))
            continue
        if n == m or n not in nodes or m not in spec.terminals:
            out.append(Violation("extra route", f"rout({n}, {m}) is outside the routing domain"))
            continue
        if spec.channels[c].source != n:
            out.append(
                Violation(
                    "source mismatch",
                    f"rout({n}, {m}) = {spec.channels[c].name} whose source is {spec.channels[c].source}",
                )
            )
    for m in spec.terminals:
        for n in spec.nodes:
            if n != m and (n, m) not in spec.routing:
                out.append(Violation("missing route", f"no routing entry for ({n}, {m})"))
    return out


def validate(spec: NetworkSpec) -> ValidationReport:
    violations = _structural_violations(spec)
    if not violations:
        result = check_correct(spec)
        for (n, m), visited in sorted(result.cycles.items()):
            path = " -> ".join(str(x) for x in visited)
            violations.append(Violation("incorrect routing", f"message for {m} from {n} cycles: {path}"))
    return ValidationReport(violations)


def ensure_valid(spec: NetworkSpec) -> NetworkSpec:
    validate(spec).raise_if_invalid()
    return spec


def check_correct(spec: NetworkSpec) -> CorrectnessResult:
    hops, cycles, undefined = {}, {}, {}
    bound = len(spec.nodes)
    for m in spec.terminals:
        for n in spec.nodes:
            cur, visited = n, [n]
            for k in range(bound + 1):
                if cur == m:
                    hops[n, m] = k
                    break
                c = spec.routing.get((cur, m))
                if c is None or not 0 <= c < len(spec.channels):
                    undefined[n, m] = visited
                    break
                cur = spec.channels[c].target
                visited.append(cur)
            else:
                cycles[n, m] = visited
    return CorrectnessResult(hops, cycles, undefined)


def next_hop(spec: NetworkSpec, n: int, m: int) -> int:
    return spec.channels[spec.rout(n, m)].target


def next_channel(spec: NetworkSpec, c: int, m: int) -> int:
    target = spec.channels[c].target
    if target == m:
        raise UndefinedRouteError(f"message {m} in {spec.channels[c].name} is received, not forwarded")
    return spec.rout(target, m)


def steps_to_dest(spec: NetworkSpec, c: int, m: int | None) -> int:
    """Number of channel steps (including the final receive) for ``m`` in ``c``."""
    if m is None:
        return 0
    steps = 1
    limit = len(spec.channels) + 1
    while spec.channels[c].target != m:
        c = spec.rout(spec.channels[c].target, m)
        steps += 1
        if steps > limit:
            raise IncorrectNetworkError(f"message {m} never reaches its destination")
    return steps


def weight(spec: NetworkSpec, state) -> int:
    return sum(steps_to_dest(spec, c, m) for c, m in enumerate(state))


def routable_sets(spec: NetworkSpec) -> tuple:
    """Per channel, the terminals whose messages can ever occupy it.

    Least sets closed under injection (``m in R(rout(m', m))``) and forwarding
    (``m in R(c)`` and ``target(c) != m`` implies ``m in R(nextC_m(c))``).
    """
    sets = [set() for _ in spec.channels]
    for m in spec.terminals:
        work = deque(spec.rout(src, m) for src in spec.terminals if src != m)
        while work:
            c = work.popleft()
            if m in sets[c]:
                continue
            sets[c].add(m)
            if spec.channels[c].target != m:
                work.append(next_channel(spec, c, m))
    return tuple(frozenset(s) for s in sets)


def shortest_path_routing(nodes: Iterable[int], terminals: Iterable[int], channels) -> dict:
    """Route every node toward every terminal along its unique shortest path.

    Raises :class:`AmbiguousRoutingError` when some node has more than one
    shortest path to a terminal. Unreachable pairs get no entry.
    """
    nodes = _as_tuple(nodes)
    incoming = {n: [] for n in nodes}
    for i, ch in enumerate(channels):
        incoming.setdefault(ch.target, []).append(i)
    routing = {}
    for m in _as_tuple(terminals):
        dist = {m: 0}
        # number of distinct shortest paths from each node to m
        count = {m: 1}
        order = [m]
        queue = deque([m])
        while queue:
            x = queue.popleft()
            for i in incoming.get(x, ()):
                src = channels[i].source
                if src not in dist:
                    dist[src] = dist[x] + 1
                    count[src] = 0
                    order.append(src)
                    queue.append(src)
                if dist[src] == dist[x] + 1:
                    count[src] += count[x]
        for n in order[1:]:
            if count[n] != 1:
                raise AmbiguousRoutingError(f"{count[n]} shortest paths from {n} to {m}")
            for i, ch in enumerate(channels):
                if ch.source == n and dist.get(ch.target) == dist[n] - 1:
                    routing[n, m] = i
                    break
    return routing
