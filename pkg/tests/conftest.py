import pytest

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def acceptance():
    """Record one pass/fail line per acceptance criterion."""

    def record(number: int, title: str, ok: bool, detail: str = "", runtime: float | None = None):
        t = "" if runtime is None else f" [{runtime:.1f} s]"
        line = f"criterion {number} {'PASS' if ok else 'FAIL'}: {title}{t}" + (f" -- {detail}" if detail else "")
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
