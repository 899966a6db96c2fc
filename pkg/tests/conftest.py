import pytest

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def record_check():
    """Print a criterion result and keep it for the end-of-session summary."""

    def record(check):
        line = check.line()
        print(line)
        ACCEPTANCE_LINES.append(line)
        return check

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion")[1].split()[0])):
            terminalreporter.write_line(line)
