import os

# keep process pools out of the test run unless asked for; results do not depend on it
os.environ.setdefault("PAOICACHE_WORKERS", "1")

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
