"""Global, weak and local deadlock detection over explored state graphs."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from . import semantics
from .explorer import Budget, StateCodec, StateGraph, Trace, explore, forward_closure, trace_to
from .network import NetworkSpec, weight
from .semantics import EMPTY


class Notion(str, enum.Enum):
    GLOBAL = "global"
    LOCAL = "local"
    WEAK = "weak"


ALL_NOTIONS = (Notion.GLOBAL, Notion.LOCAL, Notion.WEAK)


@dataclass
class DeadlockVerdict:
    """``found`` is None when the search was cut short without a witness."""

    notion: Notion
    found: Optional[bool]
    exhaustive: bool
    witness: Optional[int] = None
    witness_state: Optional[tuple] = None
    witness_channels: tuple = ()
    trace: Optional[Trace] = None

    def __post_init__(self):
        if self.found is False and not self.exhaustive:
            raise ValueError("absence verdicts need an exhaustive search")
        if self.found and self.notion is Notion.LOCAL and not self.witness_channels:
            raise ValueError("local deadlock witness without deadlocked channels")

    @property
    def status(self) -> str:
        if self.found:
            return "found"
        return "absent" if self.found is False else "unknown"


@dataclass
class InclusionCheck:
    g_subset_w: bool
    g_subset_l: bool
    w_subset_l: bool
    initial_excluded: bool
    counterexamples: list = field(default_factory=list)
    sizes: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.g_subset_w and self.g_subset_l and self.w_subset_l and self.initial_excluded


# -- vectorized state predicates (rows of channel digits) -----------------


def pr_enabled_mask(codec: StateCodec, digits: np.ndarray) -> np.ndarray:
    n, nch = digits.shape
    padded = np.concatenate([digits, np.ones((n, 1), dtype=digits.dtype)], axis=1)
    rows = np.arange(n)
    out = np.zeros(n, dtype=bool)
    for c in range(nch):
        d = digits[:, c]
        out |= codec.recv_rule[c, d] >= 0
        out |= (codec.proc_rule[c, d] >= 0) & (padded[rows, codec.next_chan[c, d]] == 0)
    return out


def send_enabled_mask(codec: StateCodec, digits: np.ndarray) -> np.ndarray:
    if codec.n_sends == 0:
        return np.zeros(len(digits), dtype=bool)
    return (digits[:, np.unique(codec.send_channel)] == 0).any(axis=1)


def global_mask(codec: StateCodec, digits: np.ndarray) -> np.ndarray:
    return ~send_enabled_mask(codec, digits) & ~pr_enabled_mask(codec, digits)


def weak_mask(codec: StateCodec, digits: np.ndarray) -> np.ndarray:
    return (digits != 0).any(axis=1) & ~pr_enabled_mask(codec, digits)


def blocked_matrix(codec: StateCodec, digits: np.ndarray) -> np.ndarray:
    """Per state and channel: is the channel part of a closed blocked set.

    A channel is blocked when it holds a message not yet at its target and
    the message's next channel is itself blocked. The greatest such set never
    changes again, and every permanently stuck channel belongs to it, so a
    non-empty set characterizes local deadlock state by state.
    """
    n, nch = digits.shape
    cols = np.arange(nch)
    nxt = codec.next_chan[cols[None, :], digits]
    blocked = codec.proc_rule[cols[None, :], digits] >= 0
    rows = np.arange(n)[:, None]
    while True:
        padded = np.concatenate([blocked, np.zeros((n, 1), dtype=bool)], axis=1)
        updated = blocked & padded[rows, nxt]
        if np.array_equal(updated, blocked):
            return blocked
        blocked = updated


def local_structural_mask(codec: StateCodec, digits: np.ndarray) -> np.ndarray:
    return blocked_matrix(codec, digits).any(axis=1)


def blocked_channels(spec: NetworkSpec, state) -> frozenset:
    """Scalar form of :func:`blocked_matrix` for one state."""
    blocked = set()
    for c, m in enumerate(state):
        if m is not EMPTY and spec.channels[c].target != m:
            blocked.add(c)
    changed = True
    while changed:
        changed = False
        for c in sorted(blocked):
            m = state[c]
            if spec.rout(spec.channels[c].target, m) not in blocked:
                blocked.discard(c)
                changed = True
    return frozenset(blocked)


# -- detectors -------------------------------------------------------------


class _BestHit:
    """Witness choice: least weight (fewest hops still to travel), then least BFS index."""

    def __init__(self):
        self.key = None

    def offer(self, codec: StateCodec, start: int, digits: np.ndarray, mask: np.ndarray):
        hits = np.flatnonzero(mask)
        if not len(hits):
            return
        wts = codec.weights_of(digits[hits])
        j = int(np.argmin(wts))
        key = (int(wts[j]), start + int(hits[j]))
        if self.key is None or key < self.key:
            self.key = key

    @property
    def index(self) -> Optional[int]:
        return None if self.key is None else self.key[1]


def _best_hit(graph: StateGraph, predicate) -> Optional[int]:
    best = _BestHit()
    for start, digits in graph.chunks():
        best.offer(graph.codec, start, digits, predicate(graph.codec, digits))
    return best.index


def _verdict(graph: StateGraph, notion: Notion, witness: Optional[int], channels=()) -> DeadlockVerdict:
    if witness is None:
        return DeadlockVerdict(notion, False if graph.complete else None, graph.complete)
    state = graph.state(witness)
    return DeadlockVerdict(
        notion,
        True,
        graph.complete,
        witness=witness,
        witness_state=state,
        witness_channels=tuple(channels),
        trace=trace_to(graph, witness),
    )


def detect_global(spec: NetworkSpec, graph: StateGraph) -> DeadlockVerdict:
    """A reachable state with no enabled step at all."""
    return _verdict(graph, Notion.GLOBAL, _best_hit(graph, global_mask))


def detect_weak(spec: NetworkSpec, graph: StateGraph) -> DeadlockVerdict:
    """A non-initial state with neither a process nor a receive step enabled."""
    return _verdict(graph, Notion.WEAK, _best_hit(graph, weak_mask))


def local_deadlock_matrix(graph: StateGraph) -> np.ndarray:
    """``M[s, c]`` is true iff channel ``c`` is deadlocked in state ``s``.

    Computed on the complete graph as AG(c = current content): a state is
    unstable for ``c`` once it can reach an edge along which ``c`` changes,
    which is a backward closure from the sources of such edges.
    """
    graph.require_edges()
    n = len(graph)
    nch = graph.spec.n_channels
    src = graph.edge_sources()
    dst = graph.edge_dst
    rptr, rsrc = graph.reverse_edges()
    out = np.zeros((n, nch), dtype=bool)
    for c in range(nch):
        val = (graph.codes // graph.codec.weights[c]) % graph.codec.radices[c]
        val = val.astype(np.int64)
        changing = np.unique(src[val[dst] != val[src]])
        candidates = val != 0
        candidates[changing] = False
        if not candidates.any():
            continue
        unstable = np.zeros(n, dtype=bool)
        if len(changing):
            unstable[forward_closure(rptr, rsrc, changing, n)] = True
        out[:, c] = (val != 0) & ~unstable
    return out


def _deadlocked_pairs(graph: StateGraph, index: int, channels) -> tuple:
    state = graph.state(index)
    return tuple((int(c), state[c]) for c in channels)


def detect_local(spec: NetworkSpec, graph: StateGraph) -> DeadlockVerdict:
    matrix = local_deadlock_matrix(graph)
    best = _BestHit()
    for start, digits in graph.chunks():
        best.offer(graph.codec, start, digits, matrix[start : start + len(digits)].any(axis=1))
    if best.index is None:
        return _verdict(graph, Notion.LOCAL, None)
    w = best.index
    return _verdict(graph, Notion.LOCAL, w, _deadlocked_pairs(graph, w, np.flatnonzero(matrix[w])))


def pr_descent(spec: NetworkSpec, state) -> tuple:
    """Apply process/receive steps in canonical order until none is enabled.

    Returns ``(final_state, steps)``. Each step lowers the weight by one, so
    at most ``weight(state)`` steps are taken.
    """
    steps = []
    bound = weight(spec, state)
    while True:
        enabled = semantics.pr_steps(spec, state)
        if not enabled:
            return state, steps
        if len(steps) >= bound:
            raise AssertionError("process/receive sequence exceeds the state weight")
        state = semantics.apply(spec, state, enabled[0])
        steps.append(enabled[0])


def weak_from_local(spec: NetworkSpec, graph: StateGraph, local_witness: int) -> int:
    """Index of the weak deadlock reached from a local deadlock by pr-steps only."""
    state = graph.state(local_witness)
    if not blocked_channels(spec, state):
        raise ValueError(f"state {local_witness} is not a local deadlock")
    final, _ = pr_descent(spec, state)
    index = graph.index_of(final)
    if index < 0:
        raise LookupError("weak deadlock lies outside the explored graph")
    return index


def deadlock_sets(graph: StateGraph, method: str | None = None) -> dict:
    """Boolean membership masks for G, W and L over every explored state."""
    graph.require_complete()
    if method is None:
        method = "graph" if graph.has_edges else "structural"
    masks = {Notion.GLOBAL: [], Notion.WEAK: []}
    local_parts = []
    for _, digits in graph.chunks():
        masks[Notion.GLOBAL].append(global_mask(graph.codec, digits))
        masks[Notion.WEAK].append(weak_mask(graph.codec, digits))
        if method == "structural":
            local_parts.append(local_structural_mask(graph.codec, digits))
    out = {k: np.concatenate(v) for k, v in masks.items()}
    if method == "graph":
        out[Notion.LOCAL] = local_deadlock_matrix(graph).any(axis=1)
    elif method == "structural":
        out[Notion.LOCAL] = np.concatenate(local_parts)
    else:
        raise ValueError(f"unknown method {method!r}")
    return out


def _inclusions_from_masks(g, w, loc, initial_index=0) -> InclusionCheck:
    bad_gw = np.flatnonzero(g & ~w)
    bad_gl = np.flatnonzero(g & ~loc)
    bad_wl = np.flatnonzero(w & ~loc)
    initial_excluded = not (g[initial_index] or w[initial_index] or loc[initial_index])
    bad = sorted(set(bad_gw.tolist()) | set(bad_gl.tolist()) | set(bad_wl.tolist()))
    if not initial_excluded:
        bad.insert(0, initial_index)
    return InclusionCheck(
        g_subset_w=not len(bad_gw),
        g_subset_l=not len(bad_gl),
        w_subset_l=not len(bad_wl),
        initial_excluded=initial_excluded,
        counterexamples=bad,
        sizes={"global": int(g.sum()), "weak": int(w.sum()), "local": int(loc.sum())},
    )


def check_inclusions(spec: NetworkSpec, graph: StateGraph, method: str | None = None) -> InclusionCheck:
    sets = deadlock_sets(graph, method)
    return _inclusions_from_masks(sets[Notion.GLOBAL], sets[Notion.WEAK], sets[Notion.LOCAL])


def check_equiexistence(spec: NetworkSpec, graph: StateGraph, method: str | None = None) -> bool:
    sets = deadlock_sets(graph, method)
    return bool(sets[Notion.LOCAL].any()) == bool(sets[Notion.WEAK].any())


# -- one-pass analysis -----------------------------------------------------


@dataclass
class Analysis:
    spec: NetworkSpec
    graph: StateGraph
    verdicts: dict
    inclusions: Optional[InclusionCheck]

    @property
    def unknown(self) -> list:
        return [n for n, v in self.verdicts.items() if v.found is None]


_PREDICATES = {
    Notion.GLOBAL: global_mask,
    Notion.WEAK: weak_mask,
    Notion.LOCAL: local_structural_mask,
}


def analyze(
    spec: NetworkSpec,
    notions: Iterable[Notion] = ALL_NOTIONS,
    budget: Budget | None = None,
    *,
    early_stop: bool = False,
) -> Analysis:
    """Explore once, evaluating every requested deadlock predicate on the fly.

    Local deadlock is decided per state through :func:`blocked_matrix`, so no
    edges are stored. With ``early_stop`` exploration ends as soon as every
    requested notion has a witness.
    """
    notions = [Notion(n) for n in notions]
    codec = StateCodec(spec)
    best = {n: _BestHit() for n in notions}
    counts = {n: 0 for n in ALL_NOTIONS}
    violations = {"gw": [], "gl": [], "wl": []}
    initial_hit = [False]

    def hook(start, digits):
        masks = {n: _PREDICATES[n](codec, digits) for n in ALL_NOTIONS}
        for n, mask in masks.items():
            counts[n] += int(mask.sum())
            if n in best:
                best[n].offer(codec, start, digits, mask)
        g, w, loc = masks[Notion.GLOBAL], masks[Notion.WEAK], masks[Notion.LOCAL]
        if start == 0 and (g[0] or w[0] or loc[0]):
            initial_hit[0] = True
        for key, bad in (("gw", g & ~w), ("gl", g & ~loc), ("wl", w & ~loc)):
            if bad.any() and len(violations[key]) < 10:
                violations[key].extend((start + np.flatnonzero(bad)[:10]).tolist())
        if early_stop and all(b.index is not None for b in best.values()):
            return max(b.index for b in best.values())
        return None

    graph = explore(spec, budget, hook, codec=codec)
    verdicts = {}
    for n in notions:
        w = best[n].index
        channels = ()
        if n is Notion.LOCAL and w is not None:
            blocked = blocked_channels(spec, graph.state(w))
            channels = _deadlocked_pairs(graph, w, sorted(blocked))
        verdicts[n] = _verdict(graph, n, w, channels)
    inclusions = None
    if graph.complete:
        bad = sorted(set(violations["gw"] + violations["gl"] + violations["wl"]))
        if initial_hit[0]:
            bad.insert(0, 0)
        inclusions = InclusionCheck(
            g_subset_w=not violations["gw"],
            g_subset_l=not violations["gl"],
            w_subset_l=not violations["wl"],
            initial_excluded=not initial_hit[0],
            counterexamples=bad,
            sizes={n.value: counts[n] for n in ALL_NOTIONS},
        )
    return Analysis(spec, graph, verdicts, inclusions)


def search_state(spec: NetworkSpec, wanted: dict) -> Optional[Trace]:
    """Find a trace from the empty network to a state holding ``wanted``.

    ``wanted`` maps channel index to message. The search places one message
    at a time: a terminal injects it and it is forwarded hop by hop into its
    goal channel, which requires every channel on the way to be empty. The
    goal state carries exactly the wanted messages and nothing else.
    """
    goals = dict(wanted)
    start = semantics.initial_state(spec)

    def route_into(state, c, m):
        for src in spec.terminals:
            if src == m:
                continue
            path = [spec.rout(src, m)]
            while path[-1] != c and spec.channels[path[-1]].target != m:
                path.append(spec.rout(spec.channels[path[-1]].target, m))
            if path[-1] != c or any(state[p] is not EMPTY for p in path):
                continue
            steps = [semantics.TransitionStep(semantics.StepKind.SEND, m, src, to_channel=path[0])]
            for a, b in zip(path, path[1:]):
                steps.append(
                    semantics.TransitionStep(
                        semantics.StepKind.PROCESS, m, spec.channels[a].target, from_channel=a, to_channel=b
                    )
                )
            yield steps

    seen = set()

    def dfs(state, placed, steps):
        if len(placed) == len(goals):
            return steps
        key = frozenset(placed)
        if key in seen:
            return None
        seen.add(key)
        for c, m in sorted(goals.items()):
            if c in placed:
                continue
            for extra in route_into(state, c, m):
                nxt = state
                for t in extra:
                    nxt = semantics.apply(spec, nxt, t)
                found = dfs(nxt, placed | {c}, steps + extra)
                if found is not None:
                    return found
        return None

    steps = dfs(start, frozenset(), [])
    return None if steps is None else Trace(steps, start)
