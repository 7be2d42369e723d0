ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    """Repeat the acceptance verdict lines after the run so they survive output capture."""
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
