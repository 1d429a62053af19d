import json
from pathlib import Path

import pytest

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def reference_trajectories():
    """Trajectories recorded from gymnasium's CartPole-v1 / Acrobot-v1 (see fixtures/make_reference.py)."""
    return json.loads((FIXTURES / "reference_trajectories.json").read_text())


def pytest_terminal_summary(terminalreporter):
    """One PASS/FAIL line per acceptance criterion, with the measured values."""
    lines = []
    for outcome in ("passed", "failed"):
        for rep in terminalreporter.stats.get(outcome, []):
            props = dict(getattr(rep, "user_properties", []))
            if rep.when == "call" and "criterion" in props:
                lines.append((props["criterion"], outcome.upper()[:4], props.get("measured", "")))
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for name, status, measured in sorted(lines, key=lambda t: int(t[0].split(".")[0])):
        terminalreporter.write_line(f"{status:4s}  {name}")
        if measured:
            terminalreporter.write_line(f"      {measured}")
