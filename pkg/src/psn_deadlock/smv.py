"""SMV model and CTL deadlock formulas for symbolic model checkers (nuXmv/NuSMV)."""

from __future__ import annotations

import os
import re
import shutil
import subprocess
import tempfile
from dataclasses import dataclass, field

from .deadlock import Notion
from .network import NetworkSpec, ensure_valid, next_channel, routable_sets

TOOL_ENV = "PSN_SMV_TOOL"
CHECKER_COMMANDS = "go\ncheck_ctlspec\nquit\n"


class ExternalCheckerError(RuntimeError):
    pass


class ToolNotFoundError(ExternalCheckerError):
    pass


class CheckerParseError(ExternalCheckerError):
    pass


@dataclass
class SmvModel:
    text: str
    var_map: dict
    value_map: dict
    counts: dict = field(default_factory=dict)


@dataclass
class CtlFormula:
    notion: Notion
    text: str
    families: dict

    def spec_line(self) -> str:
        return f"CTLSPEC\n{self.text}\n"


def _naming(spec: NetworkSpec):
    var_map = {c: f"c{c + 1}" for c in range(spec.n_channels)}
    value_map = {m: spec.nodes.index(m) + 1 for m in spec.terminals}
    return var_map, value_map


@dataclass
class _Instances:
    sends: list  # (channel, message)
    processes: list  # (channel, message, next channel)
    receives: list  # (channel, message)


def _instances(spec: NetworkSpec) -> _Instances:
    routable = routable_sets(spec)
    sends = sorted(
        (spec.rout(m, m2), m2) for m in spec.terminals for m2 in spec.terminals if m != m2
    )
    processes, receives = [], []
    for c, ch in enumerate(spec.channels):
        for m in sorted(routable[c]):
            if m == ch.target:
                receives.append((c, m))
            else:
                processes.append((c, m, next_channel(spec, c, m)))
    return _Instances(sends, processes, receives)


def emit_smv(spec: NetworkSpec) -> SmvModel:
    ensure_valid(spec)
    var, val = _naming(spec)
    inst = _instances(spec)
    names = [var[c] for c in range(spec.n_channels)]

    def frame(changed: dict) -> str:
        return " & ".join(f"next({v}) = {changed.get(v, v)}" for v in names)

    stutter = frame({})
    lines = [
        f"-- {spec.name}: {len(spec.nodes)} nodes, {len(spec.terminals)} terminals, {spec.n_channels} channels",
    ]
    for c, ch in enumerate(spec.channels):
        lines.append(f"-- {var[c]} is channel {ch.name} ({ch.source} -> {ch.target})")
    lines.append("-- value 0 is the empty channel; " + ", ".join(f"{k} is destination {m}" for m, k in sorted(val.items())))
    lines += ["MODULE main", "VAR"]
    lines += [f"  {v} : 0..{len(spec.nodes)};" for v in names]
    lines += ["INIT", "  " + " & ".join(f"{v} = 0" for v in names), "TRANS"]

    blocks = []
    for c, m in inst.sends:
        src = spec.channels[c].source
        blocks.append((f"send {src} -> {m} into {spec.channels[c].name}", f"{var[c]} = 0", frame({var[c]: val[m]})))
    for c, m, c2 in inst.processes:
        blocks.append(
            (
                f"process {m} at {spec.channels[c].target}: {spec.channels[c].name} -> {spec.channels[c2].name}",
                f"{var[c]} = {val[m]} & {var[c2]} = 0",
                frame({var[c]: 0, var[c2]: val[m]}),
            )
        )
    for c, m in inst.receives:
        blocks.append((f"receive {m} from {spec.channels[c].name}", f"{var[c]} = {val[m]}", frame({var[c]: 0})))

    for i, (comment, guard, update) in enumerate(blocks):
        lead = "  " if i == 0 else "  | "
        lines += [
            f"  -- {comment}",
            f"{lead}(case",
            f"      {guard} : {update};",
            f"      TRUE : {stutter};",
            "    esac)",
        ]
    text = "\n".join(lines) + "\n"
    counts = {
        "variables": len(names),
        "send": len(inst.sends),
        "process": len(inst.processes),
        "receive": len(inst.receives),
    }
    return SmvModel(text, var, val, counts)


def _disjunction(atoms, indent="    ") -> str:
    return ("\n" + indent + "| ").join(atoms)


def emit_ctl(spec: NetworkSpec, notion) -> CtlFormula:
    ensure_valid(spec)
    notion = Notion(notion)
    var, val = _naming(spec)
    inst = _instances(spec)
    send_channels = sorted({c for c, _ in inst.sends})
    fam_send = [f"{var[c]} = 0" for c in send_channels]
    fam_process = [f"({var[c]} = {val[m]} & {var[c2]} = 0)" for c, m, c2 in inst.processes]
    fam_receive = [f"{var[c]} = {val[m]}" for c, m in inst.receives]

    if notion is Notion.GLOBAL:
        families = {"send": fam_send, "process": fam_process, "receive": fam_receive}
        atoms = fam_send + fam_process + fam_receive
        text = "  EF !(\n      " + _disjunction(atoms) + "\n  )"
    elif notion is Notion.WEAK:
        nonempty = [f"{var[c]} != 0" for c in range(spec.n_channels)]
        families = {"nonempty": nonempty, "process": fam_process, "receive": fam_receive}
        text = (
            "  EF (\n    (\n      "
            + _disjunction(nonempty)
            + "\n    )\n    & !(\n      "
            + _disjunction(fam_process + fam_receive)
            + "\n    )\n  )"
        )
    else:
        stuck = [f"EF (AG ({var[c]} = {val[m]}))" for c in range(spec.n_channels) for m in spec.terminals]
        families = {"stuck": stuck}
        text = "  " + _disjunction(stuck, indent="  ")
    return CtlFormula(notion, text, families)


def render(model: SmvModel, formulas=()) -> str:
    return model.text + "".join("\n" + f.spec_line() for f in formulas)


def export_smv(spec: NetworkSpec, notions=()) -> str:
    return render(emit_smv(spec), [emit_ctl(spec, n) for n in notions])


# -- external checker ---------------------------------------------------------


def resolve_tool(tool_path: str | None = None) -> str:
    candidate = tool_path or os.environ.get(TOOL_ENV)
    if not candidate:
        raise ToolNotFoundError(f"no model checker configured (pass a path or set {TOOL_ENV})")
    found = shutil.which(candidate)
    if found is None:
        raise ToolNotFoundError(f"model checker {candidate!r} not found or not executable")
    return found


def checker_command(tool: str, command_file: str, model_file: str) -> list:
    return [tool, "-source", command_file, model_file]


_VERDICT = re.compile(r"^-- specification (.*?) is (true|false)\s*$", re.MULTILINE | re.DOTALL)


def parse_verdicts(output: str, expected: int) -> list:
    found = [m.group(2) for m in _VERDICT.finditer(output)]
    if len(found) != expected:
        raise CheckerParseError(f"expected {expected} verdict lines, found {len(found)}")
    return found


def run_external_checker(model: SmvModel, formulas, tool_path: str | None = None, timeout: float | None = None) -> dict:
    """Check ``formulas`` against ``model`` with an SMV tool.

    Returns ``{notion: "true" | "false" | "timeout"}``. Truth of these EF
    formulas means the deadlock exists.
    """
    formulas = list(formulas)
    tool = resolve_tool(tool_path)
    with tempfile.TemporaryDirectory(prefix="psn-smv-") as tmp:
        model_file = os.path.join(tmp, "model.smv")
        command_file = os.path.join(tmp, "commands.txt")
        with open(model_file, "w") as fh:
            fh.write(render(model, formulas))
        with open(command_file, "w") as fh:
            fh.write(CHECKER_COMMANDS)
        try:
            proc = subprocess.run(
                checker_command(tool, command_file, model_file),
                capture_output=True,
                text=True,
                timeout=timeout,
                cwd=tmp,
            )
        except subprocess.TimeoutExpired:
            return {f.notion: "timeout" for f in formulas}
        except OSError as exc:
            raise ToolNotFoundError(f"cannot run {tool}: {exc}") from exc
    verdicts = parse_verdicts(proc.stdout, len(formulas))
    return {f.notion: v for f, v in zip(formulas, verdicts)}
