"""Deadlock detection for packet switching networks by explicit state-space search."""

from .corpus import BUILTINS, ParseError, builtin, format_network, grid17, parse_network
from .deadlock import (
    ALL_NOTIONS,
    Analysis,
    DeadlockVerdict,
    InclusionCheck,
    Notion,
    analyze,
    blocked_channels,
    check_equiexistence,
    check_inclusions,
    deadlock_sets,
    detect_global,
    detect_local,
    detect_weak,
    weak_from_local,
)
from .explorer import Budget, IncompleteGraphError, StateGraph, Trace, explore, trace_to
from .network import (
    Channel,
    InvalidNetworkError,
    NetworkError,
    NetworkSpec,
    check_correct,
    ensure_valid,
    shortest_path_routing,
    steps_to_dest,
    validate,
    weight,
)
from .report import RunReport
from .semantics import EMPTY, StepKind, TransitionStep, apply, enabled_steps, initial_state, make_state
from .smv import emit_ctl, emit_smv, export_smv, run_external_checker

__all__ = [name for name in dir() if not name.startswith("_")]
