"""Command line interface: ``psn-deadlock {check,export-smv,validate,xcheck}``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .corpus import BUILTINS, ParseError, builtin, format_dot, parse_network
from .deadlock import ALL_NOTIONS, Notion, analyze
from .explorer import DEFAULT_MAX_SECONDS, DEFAULT_MAX_STATES, Budget
from .network import NetworkError, check_correct, validate
from .report import RunReport
from .smv import ExternalCheckerError, emit_ctl, emit_smv, export_smv, run_external_checker

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_UNKNOWN = 2


class _Parser(argparse.ArgumentParser):
    # usage errors share exit code 1 with parse errors; 2 means "unknown"
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def _terminals(text: str) -> tuple:
    try:
        values = tuple(int(t) for t in text.replace(",", " ").split())
    except ValueError:
        raise argparse.ArgumentTypeError(f"terminals must be node ids, got {text!r}") from None
    if not values:
        raise argparse.ArgumentTypeError("empty terminal list")
    return values


def _notions(text: str) -> tuple:
    if text == "all":
        return ALL_NOTIONS
    return (Notion(text),)


def _add_network_args(p):
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--network", type=Path, help="network description file")
    src.add_argument("--builtin", choices=BUILTINS, help="builtin example network")
    p.add_argument("--terminals", type=_terminals, help="terminal set, e.g. 11,12,13,15")


def _add_budget_args(p):
    p.add_argument("--max-states", type=int, default=DEFAULT_MAX_STATES)
    p.add_argument("--max-seconds", type=float, default=DEFAULT_MAX_SECONDS)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="psn-deadlock", description="Deadlock detection for packet switching networks.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    notion_choices = ["all"] + [n.value for n in ALL_NOTIONS]

    p = sub.add_parser("check", help="explore the state space and report deadlocks")
    _add_network_args(p)
    _add_budget_args(p)
    p.add_argument("--notion", choices=notion_choices, default="all")
    p.add_argument("--format", choices=["text", "json"], default="text")
    p.add_argument("--trace", action="store_true", help="print witness traces (text format)")
    p.add_argument("--early-stop", action="store_true", help="stop once every notion has a witness")

    p = sub.add_parser("export-smv", help="write an SMV model with CTL deadlock formulas")
    _add_network_args(p)
    p.add_argument("--out", type=Path, help="output file (default stdout)")
    p.add_argument("--ctl", choices=notion_choices + ["none"], default="all")

    p = sub.add_parser("validate", help="check a network definition and its routing")
    _add_network_args(p)
    p.add_argument("--emit-dot", type=Path, metavar="FILE", help="also write a Graphviz rendering")

    p = sub.add_parser("xcheck", help="compare native verdicts with an external SMV model checker")
    _add_network_args(p)
    _add_budget_args(p)
    p.add_argument("--notion", choices=notion_choices, default="all")
    p.add_argument("--tool", help="checker executable (default: $PSN_SMV_TOOL)")
    p.add_argument("--timeout", type=float, default=9000.0, help="seconds per formula")
    return parser


def load_network(args, check: bool = True):
    if args.builtin:
        return builtin(args.builtin, args.terminals)
    try:
        text = args.network.read_text()
    except OSError as exc:
        raise NetworkError(f"cannot read {args.network}: {exc}") from exc
    return parse_network(text, args.terminals, check=check)


def _cmd_check(args, out) -> int:
    spec = load_network(args)
    analysis = analyze(
        spec,
        _notions(args.notion),
        Budget(args.max_states, args.max_seconds),
        early_stop=args.early_stop,
    )
    report = RunReport.from_analysis(analysis)
    out.write(report.to_json() if args.format == "json" else report.to_text(traces=args.trace))
    return EXIT_UNKNOWN if analysis.unknown else EXIT_OK


def _cmd_export(args, out) -> int:
    spec = load_network(args)
    notions = () if args.ctl == "none" else _notions(args.ctl)
    text = export_smv(spec, notions)
    if args.out:
        args.out.write_text(text)
    else:
        out.write(text)
    return EXIT_OK


def _cmd_validate(args, out) -> int:
    spec = load_network(args, check=False)
    report = validate(spec)
    out.write(
        f"{spec.name}: {len(spec.nodes)} nodes, {len(spec.terminals)} terminals, "
        f"{spec.n_channels} channels, {len(spec.routing)} routes\n"
    )
    for v in report.violations:
        out.write(f"  {v}\n")
    if report.valid:
        longest = max(check_correct(spec).hops.values(), default=0)
        out.write(f"valid: routing delivers every message (longest route {longest} hops)\n")
    if args.emit_dot:
        args.emit_dot.write_text(format_dot(spec))
    return EXIT_OK if report.valid else EXIT_ERROR


def _cmd_xcheck(args, out) -> int:
    spec = load_network(args)
    notions = _notions(args.notion)
    model = emit_smv(spec)
    external = {}
    for n in notions:
        external.update(run_external_checker(model, [emit_ctl(spec, n)], args.tool, args.timeout))
    native = analyze(spec, notions, Budget(args.max_states, args.max_seconds)).verdicts
    mismatch = undecided = False
    for n in notions:
        mine, theirs = native[n].status, external[n]
        if mine == "unknown" or theirs == "timeout":
            agree = "undecided"
            undecided = True
        elif (mine == "found") == (theirs == "true"):
            agree = "agree"
        else:
            agree = "MISMATCH"
            mismatch = True
        out.write(f"{n.value:7s} native={mine:8s} external={theirs:8s} {agree}\n")
    if mismatch:
        return EXIT_ERROR
    return EXIT_UNKNOWN if undecided else EXIT_OK


_COMMANDS = {"check": _cmd_check, "export-smv": _cmd_export, "validate": _cmd_validate, "xcheck": _cmd_xcheck}


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args, out)
    except ParseError as exc:
        print(f"psn-deadlock: {args.network}: {exc}", file=sys.stderr)
    except (NetworkError, ExternalCheckerError) as exc:
        print(f"psn-deadlock: {exc}", file=sys.stderr)
    return EXIT_ERROR


def main_exit():
    sys.exit(main())


if __name__ == "__main__":
    main_exit()
