import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))


def pytest_terminal_summary(terminalreporter):
    """One line per acceptance criterion, with the measured quantities."""
    lines = []
    for outcome in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(outcome, []):
            if rep.when != "call" and outcome != "error":
                continue
            props = dict(getattr(rep, "user_properties", ()))
            if "criterion" in props:
                status = "PASS" if outcome == "passed" else "FAIL"
                lines.append((props["criterion"], f"{props['criterion']} {status}: {props.get('detail', '')}"))
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
