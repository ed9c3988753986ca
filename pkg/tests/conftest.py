import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from psn_deadlock import builtin, explore  # noqa: E402

RINGS = ("ring4", "ring4-ex3", "ring4-ex4")
GOLDEN = Path(__file__).parent / "golden"


@pytest.fixture(scope="session")
def ring4():
    return builtin("ring4")


@pytest.fixture(scope="session")
def ex3():
    return builtin("ring4-ex3")


@pytest.fixture(scope="session")
def ex4():
    return builtin("ring4-ex4")


@pytest.fixture(scope="session")
def ring_graphs():
    """Complete edge-storing graphs of the three ring networks."""
    return {name: explore(builtin(name), store_edges=True) for name in RINGS}


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    if module is None or not module.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(module.RESULTS):
        ok, detail = module.RESULTS[key]
        terminalreporter.write_line(f"criterion {key}: {'PASS' if ok else 'FAIL'} - {detail}")
