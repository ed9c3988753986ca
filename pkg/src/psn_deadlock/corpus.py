"""Network description files and the builtin example networks.

File grammar (line oriented, ``#`` starts a comment)::

    name: <word>
    nodes: <id> [<id> ...]            # ids separated by spaces or commas
    terminals: <id> [<id> ...]
    channel [<name>] <src> -> <dst>   # default name "(src->dst)"
    route <node> <dest> <channel-name>
    routing: shortest-path            # instead of route lines

``nodes:``/``terminals:`` may repeat; their lists accumulate.
"""

from __future__ import annotations

import re

from .network import (
    Channel,
    NetworkError,
    NetworkSpec,
    ensure_valid,
    shortest_path_routing,
)


class ParseError(NetworkError):
    def __init__(self, lineno: int, message: str):
        self.lineno = lineno
        super().__init__(f"line {lineno}: {message}")


GRID17_EDGES = (
    (1, 2), (2, 3), (3, 4), (3, 17), (4, 5), (4, 6), (5, 6), (6, 7), (7, 8),
    (7, 17), (8, 9), (8, 10), (9, 10), (10, 11), (11, 12), (11, 17), (12, 13),
    (13, 14), (14, 15), (15, 16), (15, 17), (16, 1), (16, 2), (17, 3), (17, 7),
    (17, 11), (17, 15),
)  # fmt: skip

# grid17 terminal sets with their known deadlock verdicts
# (global, local, weak); None where no verdict is known.
REFERENCE_VERDICTS = (
    ((2, 4, 6), (True, True, True)),
    ((1, 8, 10), (True, True, True)),
    ((5, 12, 14), (True, True, True)),
    ((5, 11, 14), (False, False, False)),
    ((11, 13, 15), (False, False, False)),
    ((1, 5, 9, 13), (False, False, False)),
    ((1, 3, 5, 15), (False, False, False)),
    ((3, 7, 11, 15), (False, False, False)),
    ((1, 2, 3, 4, 5), (False, False, False)),
    ((11, 12, 13, 15), (False, True, True)),
    ((1, 5, 9, 13, 17), (False, False, False)),
    ((2, 4, 6, 10, 12), (True, True, True)),
    ((3, 7, 11, 15, 17), (False, False, False)),
    ((2, 4, 7, 10, 12, 15, 17), (False, False, False)),
    ((1, 5, 8, 11, 12, 13, 15), (False, True, True)),
    ((1, 5, 9, 11, 12, 13, 15), (False, True, True)),
    ((1, 3, 5, 7, 9, 11, 13, 15, 17), (False, False, False)),
    ((2, 3, 4, 7, 10, 11, 12, 15, 17), (False, False, False)),
    ((2, 4, 6, 10, 12, 14), None),
    ((6, 8, 10, 12, 14, 16), None),
    ((2, 4, 6, 8, 10, 12, 14, 16), None),
)

# A blocked cycle reachable in grid17 with M = {1,5,8,11,12,13,15}:
# (source, target) of each channel and the message it holds.
GRID17_BLOCKED_CYCLE = (
    ((15, 17), 11),
    ((17, 11), 12),
    ((11, 12), 13),
    ((12, 13), 11),
    ((13, 14), 11),
    ((14, 15), 11),
)

BUILTINS = ("ring4", "ring4-ex3", "ring4-ex4", "grid17")


def _ring(name: str, extra=None) -> NetworkSpec:
    nodes = (1, 2, 3, 4)
    channels = [Channel(f"c_{i}", i, i % 4 + 1) for i in nodes]
    routing = {(n, m): n - 1 for n in nodes for m in nodes if n != m}
    if extra is not None:
        (src, dst), rerouted = extra
        channels.append(Channel("c_5", src, dst))
        routing[rerouted] = 4
    return NetworkSpec(name, nodes, nodes, channels, routing)


def grid17(terminals) -> NetworkSpec:
    channels = [Channel(f"({a}->{b})", a, b) for a, b in GRID17_EDGES]
    nodes = range(1, 18)
    routing = shortest_path_routing(nodes, terminals, channels)
    label = "grid17[" + ",".join(str(t) for t in sorted(set(terminals))) + "]"
    return NetworkSpec(label, nodes, terminals, channels, routing)


def builtin(name: str, terminals=None) -> NetworkSpec:
    """One of the example networks; ``grid17`` needs ``terminals``."""
    if name == "grid17":
        if not terminals:
            raise NetworkError("grid17 needs a terminal set")
        return ensure_valid(grid17(terminals))
    if terminals:
        raise NetworkError(f"{name} has a fixed terminal set")
    if name == "ring4":
        return _ring("ring4")
    if name == "ring4-ex3":
        return _ring("ring4-ex3", ((3, 2), (3, 2)))
    if name == "ring4-ex4":
        return _ring("ring4-ex4", ((2, 1), (2, 1)))
    raise NetworkError(f"unknown builtin network {name!r}; choose from {', '.join(BUILTINS)}")


_IDS = re.compile(r"[,\s]+")


def _parse_ids(text: str, lineno: int) -> list:
    out = []
    for tok in _IDS.split(text.strip()):
        if not tok:
            continue
        if not tok.isdigit() or int(tok) <= 0:
            raise ParseError(lineno, f"node id must be a positive integer, got {tok!r}")
        out.append(int(tok))
    return out


def parse_network(text: str, terminals=None, *, check: bool = True) -> NetworkSpec:
    """Parse and validate a network description.

    ``terminals`` overrides the file's terminal list (useful with
    ``routing: shortest-path``). With ``check=False`` the semantic checks are
    left to the caller; syntax errors still raise :class:`ParseError`.
    """
    name = "network"
    nodes, term_list, channels, routes = [], [], [], []
    shortest = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, rest = line.partition(":")
        key = key.strip().lower()
        if sep and key in ("name", "nodes", "terminals", "routing"):
            rest = rest.strip()
            if key == "name":
                if not rest:
                    raise ParseError(lineno, "empty network name")
                name = rest
            elif key == "nodes":
                nodes += _parse_ids(rest, lineno)
            elif key == "terminals":
                term_list += _parse_ids(rest, lineno)
            elif rest != "shortest-path":
                raise ParseError(lineno, f"unknown routing directive {rest!r}")
            else:
                shortest = True
            continue
        words = line.split()
        if words[0] == "channel":
            args = words[1:]
            if len(args) == 3 and args[1] == "->":
                cname = None
            elif len(args) == 4 and args[2] == "->":
                cname, args = args[0], args[1:]
            else:
                raise ParseError(lineno, "expected 'channel [<name>] <src> -> <dst>'")
            src, dst = _parse_ids(args[0], lineno), _parse_ids(args[2], lineno)
            if len(src) != 1 or len(dst) != 1:
                raise ParseError(lineno, "channel endpoints must be single node ids")
            cname = cname or f"({src[0]}->{dst[0]})"
            channels.append((lineno, Channel(cname, src[0], dst[0])))
        elif words[0] == "route":
            if len(words) != 4:
                raise ParseError(lineno, "expected 'route <node> <dest> <channel>'")
            n, m = _parse_ids(words[1], lineno), _parse_ids(words[2], lineno)
            routes.append((lineno, n[0], m[0], words[3]))
        else:
            raise ParseError(lineno, f"unrecognized line {raw.strip()!r}")

    names, pairs = {}, set()
    for lineno, ch in channels:
        if ch.name in names:
            raise ParseError(lineno, f"duplicate channel name {ch.name!r}")
        if (ch.source, ch.target) in pairs:
            raise ParseError(lineno, f"parallel channel {ch.source} -> {ch.target}")
        names[ch.name] = len(names)
        pairs.add((ch.source, ch.target))
    if terminals is not None:
        term_list = list(terminals)
    chans = [ch for _, ch in channels]
    if shortest:
        if routes:
            raise ParseError(routes[0][0], "route lines conflict with 'routing: shortest-path'")
        routing = shortest_path_routing(nodes, term_list, chans)
    else:
        routing = {}
        for lineno, n, m, cname in routes:
            if cname not in names:
                raise ParseError(lineno, f"unknown channel {cname!r}")
            if (n, m) in routing:
                raise ParseError(lineno, f"second route for ({n}, {m})")
            routing[n, m] = names[cname]
    spec = NetworkSpec(name, nodes, term_list, chans, routing)
    return ensure_valid(spec) if check else spec


def format_network(spec: NetworkSpec) -> str:
    """Serialize with explicit route lines; ``parse_network`` reads it back."""
    lines = [
        f"name: {spec.name}",
        "nodes: " + " ".join(map(str, spec.nodes)),
        "terminals: " + " ".join(map(str, spec.terminals)),
    ]
    for ch in spec.channels:
        lines.append(f"channel {ch.name} {ch.source} -> {ch.target}")
    for (n, m), c in sorted(spec.routing.items()):
        lines.append(f"route {n} {m} {spec.channels[c].name}")
    return "\n".join(lines) + "\n"


def format_dot(spec: NetworkSpec) -> str:
    lines = [f'digraph "{spec.name}" {{']
    for n in spec.nodes:
        shape = "doublecircle" if n in spec.terminals else "circle"
        lines.append(f"  {n} [shape={shape}];")
    for ch in spec.channels:
        lines.append(f'  {ch.source} -> {ch.target} [label="{ch.name}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
