import pytest

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def record():
    """Store one summary line per acceptance criterion and echo it immediately."""

    def _record(number: int, passed: bool, detail: str, seconds: float, limit: float) -> str:
        mark = "PASS" if passed else "FAIL"
        line = f"criterion {number}: {mark}  {detail}  [{seconds:.3f} s, limit {limit:g} s]"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return line

    return _record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
