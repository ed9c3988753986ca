"""Breadth-first construction of the reachable state graph.

States are packed into integers (mixed radix, one digit per channel, digit 0
meaning empty) and whole BFS levels are expanded at once with numpy.
Deduplication keeps a sorted array of every code seen so far; new states
of a level are numbered in the order a sequential BFS would discover them.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import semantics
from .network import NetworkSpec, ensure_valid, routable_sets, steps_to_dest
from .semantics import EMPTY, StepKind, TransitionStep

log = logging.getLogger(__name__)

DEFAULT_MAX_STATES = 50_000_000
DEFAULT_MAX_SECONDS = 600.0

# successor-matrix cells per chunk
_CHUNK_CELLS = 4_000_000
# candidate successors buffered per level before an intermediate dedup
_CONSOLIDATE_AT = 8_000_000


class IncompleteGraphError(RuntimeError):
    """A universal question was asked of a graph that was not fully explored."""


@dataclass(frozen=True)
class Budget:
    max_states: Optional[int] = DEFAULT_MAX_STATES
    max_seconds: Optional[float] = DEFAULT_MAX_SECONDS

    def __post_init__(self):
        for name in ("max_states", "max_seconds"):
            value = getattr(self, name)
            if value is not None and value <= 0:
                raise ValueError(f"{name} must be positive, got {value}")


UNLIMITED = Budget(None, None)


class StateCodec:
    """Packs states into integers and expands successors level-wide.

    With ``prune`` the alphabet of each channel is restricted to its routable
    set; otherwise every channel may hold any terminal.
    """

    def __init__(self, spec: NetworkSpec, prune: bool = True):
        self.spec = spec
        self.prune = prune
        nch = spec.n_channels
        if prune:
            allowed = routable_sets(spec)
        else:
            allowed = [frozenset(spec.terminals)] * nch
        self.alphabets = [[EMPTY] + sorted(a) for a in allowed]
        self.radices = [len(a) for a in self.alphabets]
        weights, w = [], 1
        for r in self.radices:
            weights.append(w)
            w *= r
        self.space_size = w
        self.dtype = np.int64 if w < 2**62 else object
        self.weights = np.array(weights, dtype=self.dtype)
        self._digit_of = [{m: d for d, m in enumerate(a)} for a in self.alphabets]
        self._compile_rules()

    def _compile_rules(self):
        spec = self.spec
        steps = semantics.send_steps(spec, semantics.initial_state(spec))
        self.n_sends = len(steps)
        self.send_channel = np.array([t.to_channel for t in steps], dtype=np.int64)
        self.send_delta = np.array(
            [self._digit_of[t.to_channel][t.message] * self.weights[t.to_channel] for t in steps],
            dtype=self.dtype,
        )
        nch = spec.n_channels
        size = max(self.radices)
        # per (channel, digit) lookups; -1 where the rule does not apply
        self.proc_rule = np.full((nch, size), -1, dtype=np.int32)
        self.recv_rule = np.full((nch, size), -1, dtype=np.int32)
        self.next_chan = np.full((nch, size), nch, dtype=np.int64)
        self.next_digit = np.zeros((nch, size), dtype=np.int64)
        processes, receives = [], []
        for c, alphabet in enumerate(self.alphabets):
            target = spec.channels[c].target
            for d, m in enumerate(alphabet):
                if m is EMPTY:
                    continue
                if m == target:
                    receives.append((c, d, TransitionStep(StepKind.RECEIVE, m, m, from_channel=c)))
                else:
                    c2 = spec.rout(target, m)
                    if m not in self._digit_of[c2]:
                        raise ValueError(f"message {m} can enter {spec.channels[c2].name} but is outside its alphabet")
                    step = TransitionStep(StepKind.PROCESS, m, target, from_channel=c, to_channel=c2)
                    processes.append((c, d, step))
                    self.next_chan[c, d] = c2
                    self.next_digit[c, d] = self._digit_of[c2][m]
        self.steps = list(steps)
        for c, d, step in processes:
            self.proc_rule[c, d] = len(self.steps)
            self.steps.append(step)
        for c, d, step in receives:
            self.recv_rule[c, d] = len(self.steps)
            self.steps.append(step)
        self.step_index = {t: i for i, t in enumerate(self.steps)}
        # remaining hops per (channel, digit), summed into the state weight
        self.hops = np.zeros((nch, size), dtype=np.int64)
        for c, alphabet in enumerate(self.alphabets):
            for d, m in enumerate(alphabet):
                self.hops[c, d] = steps_to_dest(spec, c, m)

    # -- packing ---------------------------------------------------------

    def encode(self, state) -> int:
        code = 0
        for c, m in enumerate(state):
            try:
                d = self._digit_of[c][m]
            except KeyError:
                raise ValueError(f"{m} cannot occupy channel {self.spec.channels[c].name}") from None
            code += d * int(self.weights[c])
        return code

    def decode(self, code) -> tuple:
        code = int(code)
        out = []
        for alphabet, r in zip(self.alphabets, self.radices):
            code, d = divmod(code, r)
            out.append(alphabet[d])
        return tuple(out)

    def digits(self, codes: np.ndarray) -> np.ndarray:
        out = np.empty((len(codes), len(self.radices)), dtype=np.int16)
        for c, r in enumerate(self.radices):
            out[:, c] = (codes // self.weights[c]) % r
        return out

    def contents(self, digits: np.ndarray) -> np.ndarray:
        """Digits to message ids, 0 standing for an empty channel."""
        out = np.zeros(digits.shape, dtype=np.int64)
        for c, alphabet in enumerate(self.alphabets):
            table = np.array([0 if m is EMPTY else m for m in alphabet], dtype=np.int64)
            out[:, c] = table[digits[:, c]]
        return out

    def weights_of(self, digits: np.ndarray) -> np.ndarray:
        cols = np.arange(digits.shape[1])
        return self.hops[cols[None, :], digits].sum(axis=1)

    # -- successor generation ---------------------------------------------

    def successor_matrix(self, codes: np.ndarray, digits: np.ndarray):
        """Return ``(succ, rule, valid)`` of shape ``(n, n_sends + 2 * n_channels)``.

        Column order per row matches the canonical step order, so a row-major
        walk over valid cells enumerates successors exactly as
        :func:`semantics.enabled_steps` lists steps.
        """
        n = len(codes)
        nch = len(self.radices)
        ns = self.n_sends
        width = ns + 2 * nch
        succ = np.zeros((n, width), dtype=self.dtype)
        rule = np.full((n, width), -1, dtype=np.int32)
        valid = np.zeros((n, width), dtype=bool)
        if ns:
            valid[:, :ns] = digits[:, self.send_channel] == 0
            succ[:, :ns] = codes[:, None] + self.send_delta[None, :]
            rule[:, :ns] = np.arange(ns, dtype=np.int32)
        # padding column so next_chan == n_channels reads as "occupied"
        padded = np.concatenate([digits, np.ones((n, 1), dtype=digits.dtype)], axis=1)
        rows = np.arange(n)
        for c in range(nch):
            d = digits[:, c]
            w = self.weights[c]
            pr = self.proc_rule[c, d]
            nxt = self.next_chan[c, d]
            ok = (pr >= 0) & (padded[rows, nxt] == 0)
            col = ns + c
            valid[:, col] = ok
            rule[:, col] = pr
            nw = self.weights[np.minimum(nxt, nch - 1)]
            succ[:, col] = codes - d * w + self.next_digit[c, d] * nw
            rr = self.recv_rule[c, d]
            col = ns + nch + c
            valid[:, col] = rr >= 0
            rule[:, col] = rr
            succ[:, col] = codes - d * w
        return succ, rule, valid


@dataclass
class Trace:
    steps: list
    start: tuple

    def __len__(self):
        return len(self.steps)

    def replay(self, spec: NetworkSpec) -> tuple:
        state = self.start
        for step in self.steps:
            state = semantics.apply(spec, state, step)
        return state


@dataclass
class StateGraph:
    """Reachable states in BFS discovery order, state 0 being the root.

    ``parent[i]``/``parent_step[i]`` record how state ``i`` was first reached.
    When explored with ``store_edges`` and complete, ``edge_ptr``/``edge_dst``/
    ``edge_step`` hold every enabled step in CSR form (the totalization
    self-loop is never stored).
    """

    spec: NetworkSpec
    codec: StateCodec
    codes: np.ndarray
    parent: np.ndarray
    parent_step: np.ndarray
    level_starts: np.ndarray
    complete: bool
    stop_reason: str
    elapsed: float
    witness: Optional[int] = None
    edge_ptr: Optional[np.ndarray] = None
    edge_dst: Optional[np.ndarray] = None
    edge_step: Optional[np.ndarray] = None
    _cache: dict = field(default_factory=dict, repr=False)

    def __len__(self):
        return len(self.codes)

    def depth(self, i: int) -> int:
        """BFS level at which state ``i`` was discovered."""
        return int(np.searchsorted(self.level_starts, i, side="right")) - 1

    @property
    def has_edges(self) -> bool:
        return self.edge_ptr is not None

    @property
    def steps(self) -> list:
        return self.codec.steps

    def state(self, i: int) -> tuple:
        if not 0 <= i < len(self.codes):
            raise IndexError(f"no state with index {i}")
        return self.codec.decode(self.codes[i])

    @property
    def root(self) -> tuple:
        return self.state(0)

    def _sorted(self):
        if "sorted" not in self._cache:
            order = np.argsort(self.codes, kind="stable")
            self._cache["sorted"] = (order, self.codes[order])
        return self._cache["sorted"]

    def lookup(self, codes: np.ndarray) -> np.ndarray:
        """Indices of the given codes, -1 where absent."""
        order, keys = self._sorted()
        codes = np.asarray(codes, dtype=keys.dtype)
        pos = np.searchsorted(keys, codes)
        pos_c = np.minimum(pos, len(keys) - 1)
        hit = keys[pos_c] == codes
        return np.where(hit, order[pos_c], -1)

    def index_of(self, state) -> int:
        try:
            code = self.codec.encode(state)
        except ValueError:
            return -1
        return int(self.lookup(np.array([code], dtype=self.codes.dtype))[0])

    def digits(self, start: int = 0, stop: Optional[int] = None) -> np.ndarray:
        return self.codec.digits(self.codes[start:stop])

    def chunks(self, size: int = 1_000_000):
        """Yield ``(start, digits)`` blocks covering every state."""
        for start in range(0, len(self.codes), size):
            yield start, self.digits(start, start + size)

    def out_edges(self, i: int):
        self.require_edges()
        lo, hi = self.edge_ptr[i], self.edge_ptr[i + 1]
        return [(self.steps[k], int(j)) for k, j in zip(self.edge_step[lo:hi], self.edge_dst[lo:hi])]

    def require_complete(self):
        if not self.complete:
            raise IncompleteGraphError(f"exploration stopped early ({self.stop_reason}); universal verdicts unavailable")

    def require_edges(self):
        self.require_complete()
        if not self.has_edges:
            raise IncompleteGraphError("graph was explored without storing edges")

    def reverse_edges(self):
        """Predecessor CSR ``(ptr, src)``; cached."""
        self.require_edges()
        if "reverse" not in self._cache:
            n = len(self.codes)
            src = np.repeat(np.arange(n, dtype=np.int64), np.diff(self.edge_ptr))
            order = np.argsort(self.edge_dst, kind="stable")
            ptr = np.zeros(n + 1, dtype=np.int64)
            np.cumsum(np.bincount(self.edge_dst, minlength=n), out=ptr[1:])
            self._cache["reverse"] = (ptr, src[order])
        return self._cache["reverse"]

    def edge_sources(self) -> np.ndarray:
        self.require_edges()
        if "edge_src" not in self._cache:
            n = len(self.codes)
            self._cache["edge_src"] = np.repeat(np.arange(n, dtype=np.int64), np.diff(self.edge_ptr))
        return self._cache["edge_src"]


HookFn = Callable[[int, np.ndarray], Optional[int]]


def explore(
    spec: NetworkSpec,
    budget: Budget | None = None,
    on_state: HookFn | None = None,
    *,
    store_edges: bool = False,
    prune: bool = True,
    root=None,
    codec: StateCodec | None = None,
) -> StateGraph:
    """Explore the states reachable from ``root`` (default: all channels empty).

    ``on_state(start, digits)`` sees every newly numbered block of states
    (``digits`` as produced by :meth:`StateCodec.digits`, first row having
    index ``start``). Returning an index stops exploration with that state as
    the witness and ``complete=False``.
    """
    ensure_valid(spec)
    budget = budget or Budget()
    codec = codec or StateCodec(spec, prune=prune)
    t0 = time.monotonic()
    deadline = None if budget.max_seconds is None else t0 + budget.max_seconds
    max_states = budget.max_states

    if root is None:
        root = semantics.initial_state(spec)
    semantics.check_state(spec, root)
    dtype = codec.dtype
    root_code = np.array([codec.encode(root)], dtype=dtype)

    level_codes = [root_code]
    level_parent = [np.array([-1], dtype=np.int32)]
    level_step = [np.array([-1], dtype=np.int32)]
    seen = root_code.copy()
    edges = [] if store_edges else None
    total = 1
    stop_reason = "exhausted"
    witness = None
    width = codec.n_sends + 2 * spec.n_channels
    chunk = max(1, _CHUNK_CELLS // max(width, 1))

    def run_hook(first_index, codes):
        for off in range(0, len(codes), chunk):
            hit = on_state(first_index + off, codec.digits(codes[off : off + chunk]))
            if hit is not None:
                return hit
        return None

    if on_state is not None:
        witness = run_hook(0, root_code)
        if witness is not None:
            stop_reason = "hook"

    def consolidate(parts):
        # first occurrence of each code, in generation order
        code = np.concatenate(parts[0]) if parts[0] else np.empty(0, dtype=dtype)
        _, first = np.unique(code, return_index=True)
        first.sort()
        src = np.concatenate(parts[1])[first] if len(first) else np.empty(0, dtype=np.int32)
        step = np.concatenate(parts[2])[first] if len(first) else np.empty(0, dtype=np.int32)
        return code[first], src, step

    lo = 0
    truncated = False
    while witness is None:
        current = level_codes[-1]
        if len(current) == 0:
            break
        cand_code, cand_src, cand_step = [], [], []
        pending = 0
        for start in range(0, len(current), chunk):
            codes = current[start : start + chunk]
            digs = codec.digits(codes)
            succ, rule, valid = codec.successor_matrix(codes, digs)
            rows, cols = np.nonzero(valid)
            s_code = succ[rows, cols]
            s_step = rule[rows, cols]
            s_src = (rows + (lo + start)).astype(np.int32)
            if edges is not None:
                edges.append((s_src, s_step, s_code))
            pos = np.minimum(np.searchsorted(seen, s_code), len(seen) - 1)
            fresh = seen[pos] != s_code
            # keep first occurrence per code; later duplicates never win
            _, keep = np.unique(s_code[fresh], return_index=True)
            keep.sort()
            cand_code.append(s_code[fresh][keep])
            cand_src.append(s_src[fresh][keep])
            cand_step.append(s_step[fresh][keep])
            pending += len(keep)
            if pending > _CONSOLIDATE_AT:
                merged = consolidate((cand_code, cand_src, cand_step))
                cand_code, cand_src, cand_step = [merged[0]], [merged[1]], [merged[2]]
                pending = 0
                # later chunks only append, so the states that fit the budget are settled
                if max_states is not None and total + len(merged[0]) > max_states:
                    truncated = True
                    break
            if deadline is not None and time.monotonic() > deadline:
                stop_reason = "max_seconds"
                break
        if stop_reason != "exhausted":
            break
        new_codes, new_src, new_step = consolidate((cand_code, cand_src, cand_step))
        del cand_code, cand_src, cand_step
        if max_states is not None and total + len(new_codes) > max_states:
            truncated = True
        if truncated:
            keep_n = max_states - total
            new_codes, new_src, new_step = new_codes[:keep_n], new_src[:keep_n], new_step[:keep_n]
        uniq = np.sort(new_codes)
        lo += len(current)
        level_codes.append(new_codes)
        level_parent.append(new_src)
        level_step.append(new_step)
        if len(uniq):
            merged = np.concatenate([seen, uniq])
            del seen
            merged.sort(kind="stable")
            seen = merged
        del uniq
        start_index = total
        total += len(new_codes)
        log.debug("level %d: %d new states (%d total)", len(level_codes) - 1, len(new_codes), total)
        if on_state is not None and len(new_codes):
            witness = run_hook(start_index, new_codes)
            if witness is not None:
                stop_reason = "hook"
                break
        if truncated:
            stop_reason = "max_states"
            break
        if deadline is not None and time.monotonic() > deadline:
            stop_reason = "max_seconds"
            break

    complete = stop_reason == "exhausted"
    del seen
    level_starts = np.cumsum([0] + [len(c) for c in level_codes[:-1]])
    graph = StateGraph(
        spec=spec,
        codec=codec,
        codes=np.concatenate(level_codes),
        parent=np.concatenate(level_parent),
        parent_step=np.concatenate(level_step).astype(np.int32),
        level_starts=level_starts,
        complete=complete,
        stop_reason=stop_reason,
        elapsed=time.monotonic() - t0,
        witness=witness,
    )
    if complete and edges is not None:
        src = np.concatenate([e[0] for e in edges]) if edges else np.empty(0, dtype=np.int64)
        graph.edge_step = np.concatenate([e[1] for e in edges]) if edges else np.empty(0, dtype=np.int32)
        dst = graph.lookup(np.concatenate([e[2] for e in edges]) if edges else np.empty(0, dtype=dtype))
        assert (dst >= 0).all(), "edge leads outside the explored graph"
        graph.edge_dst = dst.astype(np.int64)
        ptr = np.zeros(len(graph) + 1, dtype=np.int64)
        np.cumsum(np.bincount(src, minlength=len(graph)), out=ptr[1:])
        graph.edge_ptr = ptr
    return graph


def trace_to(graph: StateGraph, index: int) -> Trace:
    if not 0 <= index < len(graph):
        raise IndexError(f"no state with index {index}")
    steps = []
    i = index
    while i != 0:
        steps.append(graph.steps[int(graph.parent_step[i])])
        i = int(graph.parent[i])
    steps.reverse()
    return Trace(steps, graph.root)


def successors_from(graph: StateGraph, index: int) -> np.ndarray:
    """Sorted indices of every state reachable from ``index`` (itself included)."""
    graph.require_edges()
    if not 0 <= index < len(graph):
        raise IndexError(f"no state with index {index}")
    return forward_closure(graph.edge_ptr, graph.edge_dst, np.array([index]), len(graph))


def _gather(ptr: np.ndarray, targets: np.ndarray, frontier: np.ndarray) -> np.ndarray:
    starts = ptr[frontier]
    counts = ptr[frontier + 1] - starts
    total = int(counts.sum())
    if total == 0:
        return np.empty(0, dtype=targets.dtype)
    offsets = np.repeat(starts - np.cumsum(counts) + counts, counts)
    return targets[offsets + np.arange(total)]


def forward_closure(ptr: np.ndarray, targets: np.ndarray, seeds: np.ndarray, n: int) -> np.ndarray:
    """Indices reachable from ``seeds`` in the CSR graph ``(ptr, targets)``."""
    mark = np.zeros(n, dtype=bool)
    frontier = np.unique(seeds)
    mark[frontier] = True
    while len(frontier):
        nxt = _gather(ptr, targets, frontier)
        nxt = np.unique(nxt[~mark[nxt]])
        mark[nxt] = True
        frontier = nxt
    return np.flatnonzero(mark)
