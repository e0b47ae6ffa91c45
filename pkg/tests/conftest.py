"""Shared test plumbing.

Keeps the tests directory importable for the oracle helpers and collects
the acceptance-criteria summary lines so they are printed after the run,
visible even when every test passes.
"""

ACCEPTANCE_LINES: list[str] = []


def record(line: str) -> None:
    ACCEPTANCE_LINES.append(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
