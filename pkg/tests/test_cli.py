import io
import json
import stat
import sys
from pathlib import Path

import jsonschema
import pytest

from psn_deadlock.cli import main
from psn_deadlock.corpus import BUILTINS, ParseError, builtin, format_dot, format_network, parse_network
from psn_deadlock.network import InvalidNetworkError
from psn_deadlock.report import load_schema

from conftest import GOLDEN

FIXTURES = Path(__file__).parent / "fixtures"


def run(*argv):
    out = io.StringIO()
    code = main(list(argv), out=out)
    return code, out.getvalue()


# -- file format -------------------------------------------------------------


def test_ring4_fixture_equals_builtin():
    assert parse_network((FIXTURES / "ring4.net").read_text()) == builtin("ring4")


def test_grid17_fixture():
    spec = parse_network((FIXTURES / "grid17.net").read_text())
    assert len(spec.channels) == 27
    assert spec.routing == builtin("grid17", (11, 12, 13, 15)).routing
    other = parse_network((FIXTURES / "grid17.net").read_text(), terminals=(2, 4, 6))
    assert other.terminals == (2, 4, 6)


def test_one_terminal_rejected():
    with pytest.raises(InvalidNetworkError) as info:
        parse_network((FIXTURES / "one_terminal.net").read_text())
    assert "too few terminals" in {v.kind for v in info.value.violations}


@pytest.mark.parametrize(
    "text, lineno",
    [
        ((FIXTURES / "syntax_error.net").read_text(), 4),
        ("nodes: 1 2\nterminals: 1 x\n", 2),
        ("nodes: 1 2\nchannel a 1 -> 2\nchannel a 2 -> 1\n", 3),
        ("nodes: 1 2\nchannel a 1 -> 2\nchannel b 1 -> 2\n", 3),
        ("nodes: 1 2\nterminals: 1 2\nchannel a 1 -> 2\nroute 1 2 zz\n", 4),
        ("frobnicate\n", 1),
        ("routing: random\n", 1),
    ],
)
def test_parse_errors_carry_line_numbers(text, lineno):
    with pytest.raises(ParseError) as info:
        parse_network(text)
    assert info.value.lineno == lineno


@pytest.mark.parametrize("name", BUILTINS)
def test_round_trip(name):
    spec = builtin(name, (2, 4, 6, 10, 12) if name == "grid17" else None)
    assert parse_network(format_network(spec)) == spec


def test_builtin_errors():
    with pytest.raises(ValueError):
        builtin("torus")
    with pytest.raises(ValueError):
        builtin("grid17")
    with pytest.raises(ValueError):
        builtin("ring4", (1, 2))


def test_builtin_shapes():
    ex3 = builtin("ring4-ex3")
    assert (ex3.channels[4].source, ex3.channels[4].target) == (3, 2)
    assert ex3.rout(3, 2) == 4
    ex4 = builtin("ring4-ex4")
    assert (ex4.channels[4].source, ex4.channels[4].target) == (2, 1)
    g = builtin("grid17", (1, 2))
    assert len(g.nodes) == 17 and len(g.channels) == 27


def test_dot():
    dot = format_dot(builtin("ring4"))
    assert dot.startswith('digraph "ring4" {') and '1 -> 2 [label="c_1"];' in dot


# -- commands ----------------------------------------------------------------


def test_check_ring4_json():
    code, out = run("check", "--builtin", "ring4", "--notion", "all", "--format", "json")
    assert code == 0
    report = json.loads(out)
    jsonschema.validate(report, load_schema())
    assert {k: v["status"] for k, v in report["verdicts"].items()} == {"global": "found", "local": "found", "weak": "found"}
    assert report["verdicts"]["global"]["witness"] == {"c_1": 3, "c_2": 4, "c_3": 1, "c_4": 2}
    assert report["inclusions"]["g_subset_w"] is True


def test_check_grid_row_text_and_json_agree():
    args = ("check", "--builtin", "grid17", "--terminals", "11,12,13,15")
    code, text = run(*args)
    assert code == 0
    code, out = run(*args, "--format", "json")
    report = json.loads(out)
    jsonschema.validate(report, load_schema())
    statuses = {k: v["status"] for k, v in report["verdicts"].items()}
    assert statuses == {"global": "absent", "local": "found", "weak": "found"}
    for notion, status in statuses.items():
        assert f"{notion + ':':8s}{status}" in text


def test_check_from_file_with_trace():
    code, out = run("check", "--network", str(FIXTURES / "ring4.net"), "--notion", "global", "--trace")
    assert code == 0
    assert "1. send 1->3 into c_1" in out
    assert "local:" not in out


def test_check_budget_exhausted():
    code, out = run("check", "--builtin", "grid17", "--terminals", "5,11,14", "--max-states", "100", "--format", "json")
    assert code == 2
    report = json.loads(out)
    jsonschema.validate(report, load_schema())
    assert report["state_space"]["complete"] is False
    assert report["inclusions"] is None
    assert {v["status"] for v in report["verdicts"].values()} == {"unknown"}


def test_check_early_stop():
    code, out = run("check", "--builtin", "grid17", "--terminals", "1,8,10", "--early-stop", "--format", "json")
    assert code == 0
    report = json.loads(out)
    assert report["state_space"]["stop_reason"] == "hook"
    assert all(v["status"] == "found" and not v["exhaustive"] for v in report["verdicts"].values())


@pytest.mark.parametrize(
    "argv",
    [
        ("check",),
        ("check", "--builtin", "nope"),
        ("check", "--builtin", "grid17"),
        ("check", "--builtin", "grid17", "--terminals", "a,b"),
        ("check", "--network", "/nonexistent.net"),
        ("check", "--network", str(FIXTURES / "syntax_error.net")),
        ("frobnicate",),
    ],
)
def test_usage_and_parse_errors_exit_1(argv, capsys):
    with pytest.raises(SystemExit) as info:
        code = main(list(argv), out=io.StringIO())
        raise SystemExit(code)
    assert info.value.code == 1


def test_export_matches_golden(tmp_path):
    target = tmp_path / "ring4.smv"
    code, _ = run("export-smv", "--builtin", "ring4", "--ctl", "all", "--out", str(target))
    assert code == 0
    assert target.read_bytes() == (GOLDEN / "ring4.smv").read_bytes()
    code, out = run("export-smv", "--builtin", "ring4", "--ctl", "none")
    assert "CTLSPEC" not in out and out.startswith("-- ring4")


def test_validate(tmp_path):
    dot = tmp_path / "g.dot"
    code, out = run("validate", "--network", str(FIXTURES / "grid17.net"), "--emit-dot", str(dot))
    assert code == 0 and "valid" in out
    assert dot.read_text().startswith('digraph "grid17"')
    code, out = run("validate", "--network", str(FIXTURES / "cyclic.net"))
    assert code == 1 and "incorrect routing" in out
    code, out = run("validate", "--network", str(FIXTURES / "one_terminal.net"))
    assert code == 1 and "too few terminals" in out


def _tool(tmp_path, verdicts):
    script = tmp_path / "smv"
    lines = "".join(f"print('-- specification f is {v}')\n" for v in verdicts)
    script.write_text(f"#!{sys.executable}\n{lines}")
    script.chmod(script.stat().st_mode | stat.S_IEXEC)
    return str(script)


def test_xcheck_agreement(tmp_path):
    tool = _tool(tmp_path, ["true"])
    code, out = run("xcheck", "--builtin", "ring4", "--notion", "global", "--tool", tool)
    assert code == 0 and "agree" in out


def test_xcheck_mismatch(tmp_path):
    tool = _tool(tmp_path, ["true"])
    code, out = run("xcheck", "--builtin", "ring4-ex3", "--notion", "global", "--tool", tool)
    assert code == 1 and "MISMATCH" in out


def test_xcheck_missing_tool(monkeypatch):
    monkeypatch.delenv("PSN_SMV_TOOL", raising=False)
    code, _ = run("xcheck", "--builtin", "ring4")
    assert code == 1


def test_module_entry_point():
    import subprocess

    proc = subprocess.run(
        [sys.executable, "-m", "psn_deadlock", "check", "--builtin", "ring4-ex4", "--notion", "weak"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert "weak:   found" in proc.stdout
