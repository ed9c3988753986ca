"""Run reports: JSON (versioned schema) and plain text renderings."""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from typing import Optional

from .deadlock import Analysis, DeadlockVerdict, InclusionCheck
from .network import NetworkSpec
from .semantics import EMPTY, format_state

SCHEMA_VERSION = 1


def load_schema() -> dict:
    return json.loads(resources.files(__package__).joinpath("report.schema.json").read_text())


@dataclass
class RunReport:
    spec: NetworkSpec
    verdicts: dict
    states: int
    complete: bool
    stop_reason: str
    seconds: float
    inclusions: Optional[InclusionCheck]

    @classmethod
    def from_analysis(cls, analysis: Analysis) -> "RunReport":
        g = analysis.graph
        report = cls(
            analysis.spec,
            analysis.verdicts,
            len(g),
            g.complete,
            g.stop_reason,
            g.elapsed,
            analysis.inclusions,
        )
        report.check_traces()
        return report

    def check_traces(self):
        for notion, v in self.verdicts.items():
            if v.found and v.trace.replay(self.spec) != v.witness_state:
                raise AssertionError(f"{notion.value} witness trace does not replay to the witness")

    def _channel_map(self, state) -> dict:
        return {ch.name: m for ch, m in zip(self.spec.channels, state)}

    def _verdict_json(self, v: DeadlockVerdict) -> dict:
        out = {"status": v.status, "exhaustive": v.exhaustive, "witness": None, "deadlocked_channels": None, "trace": None}
        if v.found:
            out["witness"] = self._channel_map(v.witness_state)
            out["trace"] = [step.to_dict(self.spec) for step in v.trace.steps]
            if v.witness_channels:
                out["deadlocked_channels"] = {self.spec.channels[c].name: m for c, m in v.witness_channels}
        return out

    def to_dict(self) -> dict:
        inc = None
        if self.inclusions is not None:
            i = self.inclusions
            inc = {
                "g_subset_w": i.g_subset_w,
                "g_subset_l": i.g_subset_l,
                "w_subset_l": i.w_subset_l,
                "initial_excluded": i.initial_excluded,
                "sizes": dict(i.sizes),
                "counterexamples": list(i.counterexamples),
            }
        return {
            "schema_version": SCHEMA_VERSION,
            "network": self.spec.name,
            "terminals": list(self.spec.terminals),
            "channels": [ch.name for ch in self.spec.channels],
            "verdicts": {n.value: self._verdict_json(v) for n, v in self.verdicts.items()},
            "state_space": {
                "states": self.states,
                "complete": self.complete,
                "stop_reason": self.stop_reason,
                "seconds": round(self.seconds, 3),
            },
            "inclusions": inc,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, ensure_ascii=False) + "\n"

    def to_text(self, traces: bool = False) -> str:
        spec = self.spec
        lines = [
            f"network {spec.name}: {len(spec.nodes)} nodes, {spec.n_channels} channels, "
            f"terminals {' '.join(map(str, spec.terminals))}",
            f"state space: {self.states} states, "
            + ("complete" if self.complete else f"incomplete ({self.stop_reason})")
            + f", {self.seconds:.2f} s",
        ]
        for notion, v in self.verdicts.items():
            line = f"{notion.value + ':':8s}{v.status}"
            if v.found:
                filled = [(c, m) for c, m in enumerate(v.witness_state) if m is not EMPTY]
                line += f"  witness {format_state(spec, v.witness_state) if len(filled) == spec.n_channels or spec.n_channels <= 8 else _filled(spec, filled)}"
                line += f" after {len(v.trace)} steps"
                if v.witness_channels:
                    stuck = " ".join(f"{spec.channels[c].name}={m}" for c, m in v.witness_channels)
                    line += f"; deadlocked {stuck}"
            lines.append(line)
            if traces and v.found:
                for k, step in enumerate(v.trace.steps, 1):
                    lines.append(f"    {k:3d}. {step.describe(spec)}")
        if self.inclusions is not None:
            i = self.inclusions
            sizes = " ".join(f"|{k[0].upper()}|={n}" for k, n in i.sizes.items())
            verdict = "hold" if i.ok else f"FAIL at states {i.counterexamples[:10]}"
            lines.append(f"inclusions G <= W <= L, initial excluded: {verdict} ({sizes})")
        return "\n".join(lines) + "\n"


def _filled(spec: NetworkSpec, filled) -> str:
    return "{" + ", ".join(f"{spec.channels[c].name}={m}" for c, m in filled) + "} others empty"
